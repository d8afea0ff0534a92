#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convlab/process.hpp"

namespace convlab {

/// Daily traded price and net asset value per share.
struct PriceSeries {
  std::vector<std::chrono::year_month_day> dates;
  std::vector<double> price;
  std::vector<double> nav;

  std::size_t size() const { return dates.size(); }
  /// Equal lengths, strictly ascending dates, positive price and nav.
  void validate() const;
};

/// x_t = ln(price_t / nav_t).
struct MispricingSeries {
  std::vector<std::chrono::year_month_day> dates;
  std::vector<double> x;
};

/// Parses CSV with header date,price,nav (ISO dates). Errors carry line numbers.
PriceSeries read_price_csv(std::istream& in);
PriceSeries read_price_csv(const std::string& path);

void write_price_csv(std::ostream& out, const PriceSeries& series);

std::chrono::year_month_day parse_iso_date(const std::string& text);
std::string format_iso_date(std::chrono::year_month_day d);

MispricingSeries mispricing(const PriceSeries& series);

struct Ar1Fit {
  double beta_hat = 0.0;
  double sigma_hat = 0.0;
  double beta_stderr = 0.0;
  std::optional<double> durbin_watson;  // undefined for all-zero residuals
  std::size_t n_obs = 0;
  double intercept = 0.0;               // only set in intercept mode
  std::vector<double> residuals;
};

/// Least squares x_t = beta x_{t-1} + e_t over consecutive observations.
/// sigma_hat uses denominator m - 1 over the m = n_obs - 1 pairs.
Ar1Fit ar1_ols(std::span<const double> x, bool intercept = false);
Ar1Fit ar1_ols(const MispricingSeries& series, bool intercept = false);

double durbin_watson(std::span<const double> residuals);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator; 0 when n == 1
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

SummaryStats summary_stats(std::span<const double> x);

/// OU parameters implied by a fit with observation spacing dt.
OUParams implied_ou(const Ar1Fit& fit, double dt = 1.0);

}  // namespace convlab

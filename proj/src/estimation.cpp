#include "convlab/estimation.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <ostream>

#include "convlab/errors.hpp"
#include "convlab/stats.hpp"

namespace convlab {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Locale-independent decimal parse; the whole field must be consumed.
std::optional<double> parse_double(const std::string& field) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

}  // namespace

std::chrono::year_month_day parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  const std::string t = trim(text);
  if (t.size() != 10 || t[4] != '-' || t[7] != '-')
    throw DomainError("date '" + text + "' is not YYYY-MM-DD");
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(t.data() + pos, t.data() + pos + len, out);
    if (ec != std::errc() || ptr != t.data() + pos + len)
      throw DomainError("date '" + text + "' is not YYYY-MM-DD");
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw DomainError("date '" + text + "' does not exist");
  return ymd;
}

std::string format_iso_date(std::chrono::year_month_day d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

void PriceSeries::validate() const {
  if (price.size() != dates.size() || nav.size() != dates.size())
    throw DomainError("price series columns have different lengths");
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i > 0 && !(dates[i] > dates[i - 1]))
      throw DomainError(fmt::format("row {}: dates must be strictly ascending", i + 1));
    if (!(price[i] > 0.0) || !std::isfinite(price[i]))
      throw DomainError(fmt::format("row {}: price must be positive, got {}", i + 1, price[i]));
    if (!(nav[i] > 0.0) || !std::isfinite(nav[i]))
      throw DomainError(fmt::format("row {}: nav must be positive, got {}", i + 1, nav[i]));
  }
}

PriceSeries read_price_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw IngestError(line_no, "empty input, expected header date,price,nav");
  if (trim(line) != "date,price,nav")
    throw IngestError(line_no, "expected header date,price,nav, got '" + trim(line) + "'");
  PriceSeries out;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 3)
      throw IngestError(line_no, fmt::format("expected 3 fields, got {}", fields.size()));
    std::chrono::year_month_day date;
    try {
      date = parse_iso_date(fields[0]);
    } catch (const DomainError& e) {
      throw IngestError(line_no, e.what());
    }
    const auto price = parse_double(fields[1]);
    const auto nav = parse_double(fields[2]);
    if (!price) throw IngestError(line_no, "price '" + fields[1] + "' is not a number");
    if (!nav) throw IngestError(line_no, "nav '" + fields[2] + "' is not a number");
    if (!(*price > 0.0) || !std::isfinite(*price))
      throw IngestError(line_no, "price must be positive");
    if (!(*nav > 0.0) || !std::isfinite(*nav)) throw IngestError(line_no, "nav must be positive");
    if (!out.dates.empty() && !(date > out.dates.back()))
      throw IngestError(line_no, "dates must be strictly ascending");
    out.dates.push_back(date);
    out.price.push_back(*price);
    out.nav.push_back(*nav);
  }
  return out;
}

PriceSeries read_price_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  return read_price_csv(in);
}

void write_price_csv(std::ostream& out, const PriceSeries& series) {
  out << "date,price,nav\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << format_iso_date(series.dates[i]) << ',' << fmt::format("{:.17g}", series.price[i]) << ','
        << fmt::format("{:.17g}", series.nav[i]) << '\n';
}

MispricingSeries mispricing(const PriceSeries& series) {
  series.validate();
  MispricingSeries out{series.dates, {}};
  out.x.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i)
    out.x.push_back(std::log(series.price[i] / series.nav[i]));
  return out;
}

double durbin_watson(std::span<const double> residuals) {
  if (residuals.size() < 2) throw DomainError("Durbin-Watson needs at least two residuals");
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < residuals.size(); ++t) {
    den += residuals[t] * residuals[t];
    if (t > 0) {
      const double d = residuals[t] - residuals[t - 1];
      num += d * d;
    }
  }
  if (den == 0.0) throw DegenerateSeriesError("Durbin-Watson is undefined for all-zero residuals");
  return num / den;
}

Ar1Fit ar1_ols(std::span<const double> x, bool intercept) {
  if (x.size() < 3)
    throw DomainError(fmt::format("AR(1) fit needs at least 3 observations, got {}", x.size()));
  const std::size_t m = x.size() - 1;
  const auto lagged = x.first(m);
  const auto current = x.subspan(1);
  double mean_lag = 0.0, mean_cur = 0.0;
  if (intercept) {
    mean_lag = mean(lagged);
    mean_cur = mean(current);
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const double a = lagged[t] - mean_lag;
    sxx += a * a;
    sxy += a * (current[t] - mean_cur);
  }
  if (sxx == 0.0) throw DegenerateSeriesError("AR(1) regressor has zero sum of squares");

  Ar1Fit fit;
  fit.n_obs = x.size();
  fit.beta_hat = sxy / sxx;
  fit.intercept = intercept ? mean_cur - fit.beta_hat * mean_lag : 0.0;
  fit.residuals.resize(m);
  double ssr = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    fit.residuals[t] = current[t] - fit.intercept - fit.beta_hat * lagged[t];
    ssr += fit.residuals[t] * fit.residuals[t];
  }
  const std::size_t dof = intercept ? m - 2 : m - 1;
  fit.sigma_hat = dof > 0 ? std::sqrt(ssr / static_cast<double>(dof)) : 0.0;
  fit.beta_stderr = fit.sigma_hat / std::sqrt(sxx);
  if (ssr > 0.0) fit.durbin_watson = durbin_watson(fit.residuals);
  return fit;
}

Ar1Fit ar1_ols(const MispricingSeries& series, bool intercept) {
  return ar1_ols(std::span<const double>(series.x), intercept);
}

SummaryStats summary_stats(std::span<const double> x) {
  if (x.empty()) throw DomainError("summary statistics need a non-empty series");
  SummaryStats s;
  s.n = x.size();
  s.mean = mean(x);
  s.std = x.size() >= 2 ? std::sqrt(sample_variance(x)) : 0.0;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

OUParams implied_ou(const Ar1Fit& fit, double dt) {
  if (!(fit.beta_hat > 0.0 && fit.beta_hat < 1.0))
    throw DomainError(fmt::format(
        "fitted beta {} is outside (0, 1); no mean-reverting OU process matches it", fit.beta_hat));
  if (!(fit.sigma_hat > 0.0))
    throw DomainError("fitted sigma is zero; the implied process is degenerate");
  return ar1_to_ou(Ar1Params(fit.beta_hat, fit.sigma_hat), dt);
}

}  // namespace convlab

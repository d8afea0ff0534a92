#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "convlab/policies.hpp"
#include "convlab/process.hpp"

namespace convlab {

struct BacktestConfig {
  Ar1Params process{0.3, 0.01};
  std::size_t n_realizations = 100;
  std::size_t horizon = 1250;  // datapoints per realization
  double cost = 0.0025;        // round trip
  std::uint64_t master_seed = 1;
  Sidedness sided = Sidedness::two;
  double leverage = 1.0;       // used by grid_search; applied after the unit-leverage run

  void validate() const;
};

/// Open thresholds S and, per S, the close thresholds s in [0, S].
struct StrategyGrid {
  std::vector<double> S_values;
  std::vector<std::vector<double>> s_values;

  /// S in [S_min, S_max] by S_step; s in {0, s_step, ...} up to and including S.
  static StrategyGrid uniform(double S_min, double S_max, double S_step, double s_step);
  static StrategyGrid single(double S, double s);

  std::size_t cells() const;
  void validate() const;
};

struct ReturnStats {
  double mean_daily = 0.0;
  std::optional<double> std_daily;  // needs at least two realizations
  std::optional<double> sharpe;     // needs std_daily > 0
  std::size_t n = 0;
};

ReturnStats summarize_returns(std::span<const double> daily_returns);

/// Per-realization average daily log return (u_T - u_0) / T, realization i
/// drawn from stream (master_seed, i). Order follows the realization index.
std::vector<double> realization_returns(const BacktestConfig& config, const ThresholdPolicy& policy);

ReturnStats run_strategy(const BacktestConfig& config, const ThresholdPolicy& policy);

struct GridRow {
  double S = 0.0;
  double s = 0.0;
  ReturnStats stats;
};

struct GridResult {
  std::vector<GridRow> rows;
};

/// Every grid cell is run on the same realizations.
GridResult grid_search(const BacktestConfig& config, const StrategyGrid& grid);

enum class Metric { mean, std, sharpe };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric m);

std::optional<double> metric_value(const ReturnStats& stats, Metric m);

/// Index of the row with the largest defined metric value (first on ties).
std::optional<std::size_t> argmax(const GridResult& result, Metric m);

/// A contour-plot sample: S and S - s in percent.
struct ContourPoint {
  double S_pct = 0.0;
  double Sms_pct = 0.0;
  std::optional<double> value;

  friend bool operator==(const ContourPoint&, const ContourPoint&) = default;
};

std::vector<ContourPoint> emit_contours(const GridResult& result, Metric m);

/// CSV with header S_pct,Sms_pct,value; 6 significant digits; missing cells empty.
void write_contours_csv(std::ostream& out, const std::vector<ContourPoint>& points);
/// Newline-delimited JSON records; missing cells are null.
void write_contours_ndjson(std::ostream& out, const std::vector<ContourPoint>& points);
std::vector<ContourPoint> read_contours_csv(std::istream& in);

void write_grid_csv(std::ostream& out, const GridResult& result);
void write_grid_ndjson(std::ostream& out, const GridResult& result);

}  // namespace convlab

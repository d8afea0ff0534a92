#include "convlab/backtest.hpp"

#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "convlab/errors.hpp"
#include "convlab/parallel.hpp"
#include "convlab/stats.hpp"

namespace convlab {

void BacktestConfig::validate() const {
  if (n_realizations < 1) throw DomainError("backtest needs at least one realization");
  if (horizon < 2) throw DomainError("backtest horizon needs at least two datapoints");
  if (!(cost >= 0.0)) throw DomainError(fmt::format("transaction cost must be >= 0, got {}", cost));
  if (!(leverage > 0.0)) throw DomainError(fmt::format("leverage must be positive, got {}", leverage));
}

StrategyGrid StrategyGrid::uniform(double S_min, double S_max, double S_step, double s_step) {
  if (!(S_min >= 0.0 && S_max >= S_min))
    throw DomainError(fmt::format("bad open-threshold range [{}, {}]", S_min, S_max));
  if (!(S_step > 0.0) || !(s_step > 0.0)) throw DomainError("grid steps must be positive");
  constexpr double kSlack = 1e-12;
  StrategyGrid grid;
  for (std::size_t i = 0;; ++i) {
    const double S = S_min + static_cast<double>(i) * S_step;
    if (S > S_max + kSlack) break;
    std::vector<double> closes;
    for (std::size_t j = 0;; ++j) {
      double s = static_cast<double>(j) * s_step;
      if (s > S + kSlack) break;
      if (std::abs(s - S) <= kSlack) s = S;
      closes.push_back(s);
    }
    grid.S_values.push_back(S);
    grid.s_values.push_back(std::move(closes));
  }
  return grid;
}

StrategyGrid StrategyGrid::single(double S, double s) { return StrategyGrid{{S}, {{s}}}; }

std::size_t StrategyGrid::cells() const {
  std::size_t n = 0;
  for (const auto& row : s_values) n += row.size();
  return n;
}

void StrategyGrid::validate() const {
  if (S_values.empty()) throw DomainError("strategy grid is empty");
  if (S_values.size() != s_values.size())
    throw DomainError("strategy grid needs one close-threshold list per open threshold");
  for (std::size_t i = 0; i < S_values.size(); ++i) {
    if (i > 0 && !(S_values[i] > S_values[i - 1]))
      throw DomainError("open thresholds must be strictly ascending");
    for (double s : s_values[i])
      if (!(s >= 0.0 && s <= S_values[i]))
        throw DomainError(fmt::format("close threshold {} outside [0, {}]", s, S_values[i]));
  }
}

ReturnStats summarize_returns(std::span<const double> daily_returns) {
  ReturnStats out;
  out.n = daily_returns.size();
  out.mean_daily = mean(daily_returns);
  if (out.n >= 2) {
    out.std_daily = std::sqrt(sample_variance(daily_returns));
    if (*out.std_daily > 0.0) out.sharpe = out.mean_daily / *out.std_daily;
  }
  return out;
}

namespace {

PathGrid realization_grid(const BacktestConfig& config) {
  return PathGrid{1.0, config.horizon - 1, config.master_seed};
}

double unit_daily_return(const MispricingPath& path, const ThresholdPolicy& unit, double cost) {
  const WealthPath w = wealth_path(path, Policy{unit}, cost);
  return (w.values.back() - w.values.front()) / static_cast<double>(path.grid.n_steps);
}

}  // namespace

std::vector<double> realization_returns(const BacktestConfig& config,
                                        const ThresholdPolicy& policy) {
  config.validate();
  const ThresholdPolicy unit = policy.with_leverage(1.0);
  const PathGrid grid = realization_grid(config);
  std::vector<double> returns(config.n_realizations);
  parallel_for(config.n_realizations, [&](std::size_t i) {
    const MispricingPath path = simulate_stationary(config.process, grid, i);
    returns[i] = policy.leverage() * unit_daily_return(path, unit, config.cost);
  });
  return returns;
}

ReturnStats run_strategy(const BacktestConfig& config, const ThresholdPolicy& policy) {
  return summarize_returns(realization_returns(config, policy));
}

GridResult grid_search(const BacktestConfig& config, const StrategyGrid& grid) {
  config.validate();
  grid.validate();
  std::vector<ThresholdPolicy> cells;
  std::vector<std::pair<double, double>> coords;
  for (std::size_t i = 0; i < grid.S_values.size(); ++i) {
    for (double s : grid.s_values[i]) {
      cells.emplace_back(grid.S_values[i], s, 1.0, config.sided);
      coords.emplace_back(grid.S_values[i], s);
    }
  }
  const PathGrid pgrid = realization_grid(config);
  // returns[c][i]: cell c on realization i. Each realization is simulated
  // once and shared by all cells.
  std::vector<std::vector<double>> returns(cells.size(), std::vector<double>(config.n_realizations));
  parallel_for(config.n_realizations, [&](std::size_t i) {
    const MispricingPath path = simulate_stationary(config.process, pgrid, i);
    for (std::size_t c = 0; c < cells.size(); ++c)
      returns[c][i] = config.leverage * unit_daily_return(path, cells[c], config.cost);
  });
  GridResult result;
  result.rows.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c)
    result.rows.push_back({coords[c].first, coords[c].second, summarize_returns(returns[c])});
  return result;
}

Metric parse_metric(std::string_view name) {
  if (name == "mean") return Metric::mean;
  if (name == "std") return Metric::std;
  if (name == "sharpe") return Metric::sharpe;
  throw DomainError(fmt::format("unknown metric '{}' (expected mean, std or sharpe)", name));
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::mean: return "mean";
    case Metric::std: return "std";
    case Metric::sharpe: return "sharpe";
  }
  return "?";
}

std::optional<double> metric_value(const ReturnStats& stats, Metric m) {
  switch (m) {
    case Metric::mean: return stats.mean_daily;
    case Metric::std: return stats.std_daily;
    case Metric::sharpe: return stats.sharpe;
  }
  return std::nullopt;
}

std::optional<std::size_t> argmax(const GridResult& result, Metric m) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto v = metric_value(result.rows[i].stats, m);
    if (!v) continue;
    if (!best || *v > *metric_value(result.rows[*best].stats, m)) best = i;
  }
  return best;
}

std::vector<ContourPoint> emit_contours(const GridResult& result, Metric m) {
  if (result.rows.empty()) throw DomainError("cannot emit contours for an empty grid");
  std::vector<ContourPoint> out;
  out.reserve(result.rows.size());
  for (const auto& row : result.rows)
    out.push_back({100.0 * row.S, 100.0 * (row.S - row.s), metric_value(row.stats, m)});
  return out;
}

namespace {

std::string num6(double v) { return fmt::format("{:.6g}", v); }

std::string num_or(const std::optional<double>& v, std::string_view missing, std::string_view pattern) {
  if (!v) return std::string(missing);
  return fmt::format(fmt::runtime(pattern), *v);
}

}  // namespace

void write_contours_csv(std::ostream& out, const std::vector<ContourPoint>& points) {
  out << "S_pct,Sms_pct,value\n";
  for (const auto& p : points)
    out << num6(p.S_pct) << ',' << num6(p.Sms_pct) << ',' << num_or(p.value, "", "{:.6g}") << '\n';
}

void write_contours_ndjson(std::ostream& out, const std::vector<ContourPoint>& points) {
  for (const auto& p : points)
    out << fmt::format("{{\"S_pct\":{},\"Sms_pct\":{},\"value\":{}}}\n", num6(p.S_pct),
                       num6(p.Sms_pct), num_or(p.value, "null", "{:.6g}"));
}

std::vector<ContourPoint> read_contours_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "S_pct,Sms_pct,value")
    throw IngestError(line_no, "expected header S_pct,Sms_pct,value");
  std::vector<ContourPoint> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c);
    try {
      ContourPoint p{std::stod(a), std::stod(b), std::nullopt};
      if (!c.empty()) p.value = std::stod(c);
      out.push_back(p);
    } catch (const std::exception&) {
      throw IngestError(line_no, "malformed contour row '" + line + "'");
    }
  }
  return out;
}

void write_grid_csv(std::ostream& out, const GridResult& result) {
  out << "S_pct,s_pct,mean_daily,std_daily,sharpe,n\n";
  for (const auto& r : result.rows)
    out << num6(100.0 * r.S) << ',' << num6(100.0 * r.s) << ','
        << fmt::format("{:.10g}", r.stats.mean_daily) << ','
        << num_or(r.stats.std_daily, "", "{:.10g}") << ',' << num_or(r.stats.sharpe, "", "{:.10g}")
        << ',' << r.stats.n << '\n';
}

void write_grid_ndjson(std::ostream& out, const GridResult& result) {
  for (const auto& r : result.rows)
    out << fmt::format(
        "{{\"S_pct\":{},\"s_pct\":{},\"mean_daily\":{:.10g},\"std_daily\":{},\"sharpe\":{},\"n\":{}}}\n",
        num6(100.0 * r.S), num6(100.0 * r.s), r.stats.mean_daily,
        num_or(r.stats.std_daily, "null", "{:.10g}"), num_or(r.stats.sharpe, "null", "{:.10g}"),
        r.stats.n);
}

}  // namespace convlab

#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "convlab/analytics.hpp"
#include "convlab/appendix_oracles.hpp"
#include "convlab/backtest.hpp"
#include "convlab/errors.hpp"
#include "convlab/estimation.hpp"
#include "convlab/parallel.hpp"
#include "convlab/policies.hpp"
#include "convlab/process.hpp"
#include "convlab/quadrature.hpp"
#include "convlab/rng.hpp"
#include "convlab/stats.hpp"

namespace convlab::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// =============================================================================
// Option plumbing
// =============================================================================

template <typename T>
std::optional<std::string> render(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (v.empty()) return std::nullopt;
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt::format("{}", v[i]);
    return s;
  } else {
    return fmt::format("{}", v);
  }
}

template <typename T>
std::optional<std::string> render(const std::optional<T>& v) {
  if (!v) return std::nullopt;
  return render(*v);
}

/// A subcommand whose resolved option values can be written to a manifest.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description)
      : app_(parent.add_subcommand(name, description)) {}

  template <typename T>
  CLI::Option* option(const std::string& name, T& var, const std::string& description) {
    auto* opt = app_->add_option("--" + name, var, description);
    recorders_.emplace_back(name, [&var]() -> std::optional<json> {
      if (auto s = render(var)) return json(*s);
      return std::nullopt;
    });
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& description) {
    auto* opt = app_->add_flag("--" + name, var, description);
    recorders_.emplace_back(name, [&var]() -> std::optional<json> { return json(var); });
    return opt;
  }

  json parameters() const {
    json p = json::object();
    for (const auto& [name, rec] : recorders_)
      if (auto v = rec()) p[name] = *v;
    return p;
  }

  CLI::App* app() const { return app_; }
  std::string name() const { return app_->get_name(); }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<std::optional<json>()>>> recorders_;
};

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string format = "csv";
};

void add_common(Command& cmd, Common& c) {
  cmd.app()->add_option("--seed", c.seed, "Master seed (falls back to CONVLAB_SEED, then 1)");
  cmd.option("threads", c.threads, "Worker thread cap (0 = hardware)");
  cmd.option("format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CONVLAB_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw DomainError(fmt::format("CONVLAB_SEED is not an unsigned integer: '{}'", s));
    return v;
  }
  return 1;
}

Sidedness parse_sided(const std::string& s) { return s == "one" ? Sidedness::one : Sidedness::two; }

// =============================================================================
// Files and formatting
// =============================================================================

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path, "cannot open for writing");
  return f;
}

void finish(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError(path, "write failed");
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

void write_manifest(const std::string& path, const Command& cmd, std::uint64_t seed) {
  json m;
  m["command"] = cmd.name();
  m["parameters"] = cmd.parameters();
  m["master_seed"] = seed;
  m["tool_version"] = kToolVersion;
  m["timestamp"] = timestamp_utc();
  auto f = open_out(path);
  f << m.dump(2) << '\n';
  finish(f, path);
}

/// A table cell: missing, number or text.
using Cell = std::variant<std::monostate, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void write(std::ostream& out, const std::string& format) const {
    if (format == "json") {
      for (const auto& row : rows) {
        json rec = json::object();
        for (std::size_t i = 0; i < columns.size(); ++i) {
          const auto& c = row[i];
          if (std::holds_alternative<double>(c)) {
            rec[columns[i]] = std::get<double>(c);
          } else if (std::holds_alternative<std::string>(c)) {
            rec[columns[i]] = std::get<std::string>(c);
          } else {
            rec[columns[i]] = nullptr;
          }
        }
        out << rec.dump() << '\n';
      }
      return;
    }
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        if (std::holds_alternative<double>(row[i])) {
          out << fmt::format("{:.10g}", std::get<double>(row[i]));
        } else if (std::holds_alternative<std::string>(row[i])) {
          out << std::get<std::string>(row[i]);
        }
      }
      out << '\n';
    }
  }
};

Cell opt_cell(const std::optional<double>& v) {
  if (v) return *v;
  return std::monostate{};
}

/// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  Sink(const std::optional<std::string>& path, std::ostream& fallback) : path_(path) {
    if (path_) file_ = std::make_unique<std::ofstream>(open_out(*path_));
    stream_ = file_ ? static_cast<std::ostream*>(file_.get()) : &fallback;
  }
  std::ostream& stream() { return *stream_; }
  void close() {
    if (file_) finish(*file_, *path_);
  }

 private:
  std::optional<std::string> path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

// =============================================================================
// analyze
// =============================================================================

struct AnalyzeOpts {
  Common common;
  double alpha = 0.0;
  double sigma = 0.0;
  double gamma = 1.0;
  std::vector<double> S;
  double k = 20.0;
  std::optional<std::string> out;
};

void setup_analyze(Command& cmd, AnalyzeOpts& o) {
  cmd.option("alpha", o.alpha, "Mean-reversion speed")->required();
  cmd.option("sigma", o.sigma, "Diffusion coefficient")->required();
  cmd.option("gamma", o.gamma, "Variance penalty (0 = Kelly)");
  cmd.option("S", o.S, "Thresholds to tabulate (default 0 to 2 sqrt(Sigma) by sqrt(Sigma)/4)")
      ->delimiter(',');
  cmd.option("k", o.k, "Sensitivity of the reported linear policy");
  cmd.option("out", o.out, "Output file (stdout when omitted)");
  add_common(cmd, o.common);
}

int run_analyze(const Command& cmd, AnalyzeOpts& o, std::ostream& out, std::ostream& err) {
  const OUParams p(o.alpha, o.sigma);
  const double Sigma = stationary_variance(p);
  const RiskPreference pref(o.gamma);
  const bool kelly = o.gamma == 0.0;
  if (o.S.empty())
    for (int i = 0; i <= 8; ++i) o.S.push_back(0.25 * i * std::sqrt(Sigma));
  for (double S : o.S)
    if (!(S >= 0.0) || !std::isfinite(S)) throw DomainError(fmt::format("threshold must be >= 0, got {}", S));

  if (o.out) write_manifest(*o.out + ".manifest.json", cmd, resolve_seed(o.common.seed));

  Table t{{"kind", "S", "k", "phi", "psi", "L", "U", "growth", "variance_rate", "long_run_variance"}, {}};
  const std::monostate none;
  for (double S : o.S) {
    const double ph = phi(S, Sigma);
    const double ps = psi(S, o.alpha, Sigma);
    if (kelly) {
      t.rows.push_back({"threshold", S, none, ph, ps, none, none, none, none, none});
      continue;
    }
    const double L = optimal_leverage_given_S(S, p, pref);
    const auto r = threshold_rates(L, S, p, pref);
    t.rows.push_back({"threshold", S, none, ph, ps, L, r.utility, r.c1, r.c2, none});
  }
  if (kelly) {
    err << "gamma = 0 (Kelly): threshold leverage is unbounded because growth is linear in L "
           "and carries no variance penalty; only linear-policy rates are reported.\n";
  } else {
    const auto opt = optimal_threshold_policy(p, pref);
    const auto r = threshold_rates(opt.L, opt.S, p, pref);
    t.rows.push_back({"optimum", opt.S, none, phi(opt.S, Sigma), psi(opt.S, o.alpha, Sigma), opt.L,
                      opt.U, r.c1, r.c2, none});
  }
  const auto lin = linear_policy_rates(o.k, p);
  t.rows.push_back({"linear", none, o.k, none, none, none,
                    kelly ? Cell(lin.growth) : Cell(lin.growth - o.gamma * lin.variance_rate),
                    lin.growth, lin.variance_rate, lin.long_run_variance});

  Sink sink(o.out, out);
  t.write(sink.stream(), o.common.format);
  sink.close();
  return kOk;
}

// =============================================================================
// simulate
// =============================================================================

struct ProcessOpts {
  std::optional<double> alpha, sigma, beta, sigma_d;
};

void add_process(Command& cmd, ProcessOpts& o) {
  cmd.option("alpha", o.alpha, "OU mean-reversion speed");
  cmd.option("sigma", o.sigma, "OU diffusion coefficient");
  cmd.option("beta", o.beta, "AR(1) coefficient per step");
  cmd.option("sigma-d", o.sigma_d, "AR(1) innovation standard deviation");
}

/// Either an OU process or a per-step AR(1); exactly one family must be given.
std::variant<OUParams, Ar1Params> resolve_process(const ProcessOpts& o) {
  const bool ou = o.alpha || o.sigma;
  const bool ar = o.beta || o.sigma_d;
  if (ou && ar) throw DomainError("give either --alpha/--sigma or --beta/--sigma-d, not both");
  if (ou) {
    if (!o.alpha || !o.sigma) throw DomainError("--alpha and --sigma must be given together");
    return OUParams(*o.alpha, *o.sigma);
  }
  if (ar) {
    if (!o.beta || !o.sigma_d) throw DomainError("--beta and --sigma-d must be given together");
    return Ar1Params(*o.beta, *o.sigma_d);
  }
  throw DomainError("a process is required: --alpha/--sigma or --beta/--sigma-d");
}

struct SimulateOpts {
  Common common;
  ProcessOpts process;
  double dt = 1.0;
  std::size_t steps = 1000;
  double x0 = 0.0;
  bool stationary = false;
  std::string policy = "zero";
  double k = 20.0;
  std::optional<double> S, s;
  double L = 1.0;
  std::string sided = "two";
  double cost = 0.0;
  std::string out;
  std::optional<std::string> prices;
};

void setup_simulate(Command& cmd, SimulateOpts& o) {
  add_process(cmd, o.process);
  cmd.option("dt", o.dt, "Time step (labels the axis for AR(1) input)");
  cmd.option("steps", o.steps, "Number of steps");
  cmd.option("x0", o.x0, "Initial mispricing");
  cmd.flag("stationary", o.stationary, "Draw x0 from the stationary law");
  cmd.option("policy", o.policy, "Leverage policy")
      ->check(CLI::IsMember({"zero", "linear", "threshold", "tanh"}));
  cmd.option("k", o.k, "Sensitivity for linear (-k x) and tanh (-k tanh x) policies");
  cmd.option("S", o.S, "Open threshold");
  cmd.option("s", o.s, "Close threshold (defaults to S)");
  cmd.option("L", o.L, "Threshold leverage");
  cmd.option("sided", o.sided, "Threshold sidedness")->check(CLI::IsMember({"one", "two"}));
  cmd.option("cost", o.cost, "Round-trip transaction cost");
  cmd.option("out", o.out, "Path for the t,x,u table")->required();
  cmd.option("prices", o.prices, "Also write a date,price,nav file with price = 100 exp(x)");
  add_common(cmd, o.common);
}

Policy make_policy(const SimulateOpts& o) {
  if (o.policy == "linear") return LinearPolicy(o.k);
  if (o.policy == "tanh") {
    const double k = o.k;
    if (!(k >= 0.0)) throw DomainError("tanh policy needs k >= 0");
    return DifferentiablePolicy([k](double x) { return -k * std::tanh(x); },
                                [k](double x) {
                                  const double c = std::cosh(x);
                                  return -k / (c * c);
                                },
                                k);
  }
  if (o.policy == "threshold") {
    if (!o.S) throw DomainError("threshold policy needs --S");
    return ThresholdPolicy(*o.S, o.s.value_or(*o.S), o.L, parse_sided(o.sided));
  }
  return LinearPolicy(0.0);
}

int run_simulate(const Command& cmd, SimulateOpts& o, std::ostream& out, std::ostream&) {
  const std::uint64_t seed = resolve_seed(o.common.seed);
  const auto process = resolve_process(o.process);
  const PathGrid grid{o.dt, o.steps, seed};
  grid.validate();
  if (!(o.cost >= 0.0)) throw DomainError("cost must be >= 0");
  const Policy policy = make_policy(o);

  write_manifest(o.out + ".manifest.json", cmd, seed);

  const auto path = std::visit(
      [&](const auto& p) {
        return o.stationary ? simulate_stationary(p, grid) : simulate(p, grid, o.x0);
      },
      process);
  const auto wealth = wealth_path(path, policy, o.cost);

  {
    auto f = open_out(o.out);
    if (o.common.format == "json") {
      for (std::size_t i = 0; i < path.values.size(); ++i)
        f << fmt::format("{{\"t\":{:.17g},\"x\":{:.17g},\"u\":{:.17g}}}\n", path.time(i),
                         path.values[i], wealth.values[i]);
    } else {
      f << "t,x,u\n";
      for (std::size_t i = 0; i < path.values.size(); ++i)
        f << fmt::format("{:.17g},{:.17g},{:.17g}\n", path.time(i), path.values[i], wealth.values[i]);
    }
    finish(f, o.out);
  }

  if (o.prices) {
    PriceSeries ps;
    std::chrono::sys_days d = std::chrono::year{2000} / std::chrono::January / 3;
    for (double x : path.values) {
      ps.dates.emplace_back(d);
      d += std::chrono::days{1};
      ps.price.push_back(100.0 * std::exp(x));
      ps.nav.push_back(100.0);
    }
    auto f = open_out(*o.prices);
    write_price_csv(f, ps);
    finish(f, *o.prices);
  }

  const auto g = realized_growth_stats(wealth, o.dt);
  out << fmt::format("mean_growth,{:.10g}\n", g.mean_growth);
  if (o.steps >= 2 * kDefaultBatches) {
    std::vector<double> incr(o.steps);
    for (std::size_t i = 0; i < o.steps; ++i)
      incr[i] = (wealth.values[i + 1] - wealth.values[i]) / o.dt;
    out << fmt::format("mean_growth_stderr,{:.10g}\n", batch_means(incr).std_error);
  }
  out << fmt::format("terminal,{:.10g}\n", g.terminal);
  out << fmt::format("variance_contribution,{:.10g}\n", g.variance_contribution);
  out << fmt::format("transactions,{}\n", wealth.transactions);
  return kOk;
}

// =============================================================================
// backtest
// =============================================================================

struct BacktestOpts {
  Common common;
  ProcessOpts process;
  double dt = 1.0;
  double cost = 0.0025;
  std::size_t realizations = 100;
  std::size_t horizon = 1250;
  double S_min = 0.005, S_max = 0.02, S_step = 0.00125, s_step = 0.00125;
  std::optional<double> S, s;
  double L = 1.0;
  std::string sided = "two";
  std::string out;
};

void setup_backtest(Command& cmd, BacktestOpts& o) {
  add_process(cmd, o.process);
  cmd.option("dt", o.dt, "Step length used to map --alpha/--sigma onto a daily AR(1)");
  cmd.option("cost", o.cost, "Round-trip transaction cost");
  cmd.option("realizations", o.realizations, "Number of simulated realizations");
  cmd.option("horizon", o.horizon, "Datapoints per realization");
  cmd.option("S-min", o.S_min, "Smallest open threshold");
  cmd.option("S-max", o.S_max, "Largest open threshold");
  cmd.option("S-step", o.S_step, "Open threshold step");
  cmd.option("s-step", o.s_step, "Close threshold step");
  cmd.option("S", o.S, "Run a single cell with this open threshold");
  cmd.option("s", o.s, "Close threshold of the single cell (defaults to S)");
  cmd.option("L", o.L, "Leverage");
  cmd.option("sided", o.sided, "Threshold sidedness")->check(CLI::IsMember({"one", "two"}));
  cmd.option("out", o.out, "Output directory")->required();
  add_common(cmd, o.common);
}

int run_backtest(const Command& cmd, BacktestOpts& o, std::ostream& out, std::ostream&) {
  BacktestConfig config;
  config.master_seed = resolve_seed(o.common.seed);
  if (o.process.alpha || o.process.sigma || o.process.beta || o.process.sigma_d) {
    const auto pr = resolve_process(o.process);
    if (std::holds_alternative<OUParams>(pr)) {
      config.process = ou_to_ar1(std::get<OUParams>(pr), o.dt);
    } else {
      config.process = std::get<Ar1Params>(pr);
    }
  }
  config.cost = o.cost;
  config.n_realizations = o.realizations;
  config.horizon = o.horizon;
  config.sided = parse_sided(o.sided);
  config.leverage = o.L;
  config.validate();
  if (o.s && !o.S) throw DomainError("--s needs --S");
  const auto grid = o.S ? StrategyGrid::single(*o.S, o.s.value_or(*o.S))
                        : StrategyGrid::uniform(o.S_min, o.S_max, o.S_step, o.s_step);
  grid.validate();

  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw IoError(o.out, "cannot create directory: " + ec.message());
  const fs::path dir(o.out);
  write_manifest((dir / "manifest.json").string(), cmd, config.master_seed);

  const auto result = grid_search(config, grid);
  const bool js = o.common.format == "json";
  const std::string ext = js ? ".ndjson" : ".csv";
  {
    const auto p = (dir / ("grid" + ext)).string();
    auto f = open_out(p);
    js ? write_grid_ndjson(f, result) : write_grid_csv(f, result);
    finish(f, p);
  }
  for (Metric m : {Metric::mean, Metric::std, Metric::sharpe}) {
    const auto p = (dir / (fmt::format("contour_{}", to_string(m)) + ext)).string();
    const auto pts = emit_contours(result, m);
    auto f = open_out(p);
    js ? write_contours_ndjson(f, pts) : write_contours_csv(f, pts);
    finish(f, p);
  }
  out << "metric,S,s,value\n";
  for (Metric m : {Metric::mean, Metric::sharpe}) {
    if (const auto i = argmax(result, m)) {
      const auto& row = result.rows[*i];
      out << fmt::format("{},{:.10g},{:.10g},{:.10g}\n", to_string(m), row.S, row.s,
                         *metric_value(row.stats, m));
    } else {
      out << fmt::format("{},,,\n", to_string(m));
    }
  }
  return kOk;
}

// =============================================================================
// estimate
// =============================================================================

struct EstimateOpts {
  Common common;
  std::string input;
  bool intercept = false;
  double dt = 1.0;
  std::optional<std::string> out;
};

void setup_estimate(Command& cmd, EstimateOpts& o) {
  cmd.option("input", o.input, "CSV with header date,price,nav")->required();
  cmd.flag("intercept", o.intercept, "Fit an intercept");
  cmd.option("dt", o.dt, "Observation spacing for the implied OU process");
  cmd.option("out", o.out, "Report file (stdout when omitted)");
  add_common(cmd, o.common);
}

/// key,value rows; the CSV header is written by the first call only.
void write_kv(std::ostream& out, const std::vector<std::pair<std::string, Cell>>& rows,
              const std::string& format, bool header) {
  Table t{{"key", "value"}, {}};
  for (const auto& [k, v] : rows) t.rows.push_back({k, v});
  if (format == "json" || header) {
    t.write(out, format);
    return;
  }
  for (const auto& [k, v] : rows)
    out << k << ',' << (std::holds_alternative<double>(v) ? fmt::format("{:.10g}", std::get<double>(v)) : "")
        << '\n';
}

int run_estimate(const Command& cmd, EstimateOpts& o, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(o.common.seed);
  const auto series = read_price_csv(o.input);
  const auto m = mispricing(series);
  if (o.out) write_manifest(*o.out + ".manifest.json", cmd, seed);

  Sink sink(o.out, out);
  const auto s = summary_stats(m.x);
  write_kv(sink.stream(),
           {{"summary.n", static_cast<double>(s.n)},
            {"summary.mean", s.mean},
            {"summary.std", s.std},
            {"summary.min", s.min},
            {"summary.max", s.max}},
           o.common.format, true);

  Ar1Fit fit;
  try {
    fit = ar1_ols(m, o.intercept);
  } catch (const DomainError&) {
    sink.close();  // the summary stays on record
    throw;
  }
  std::vector<std::pair<std::string, Cell>> rows{{"fit.beta_hat", fit.beta_hat},
                                                 {"fit.beta_stderr", fit.beta_stderr},
                                                 {"fit.sigma_hat", fit.sigma_hat},
                                                 {"fit.n_obs", static_cast<double>(fit.n_obs)}};
  if (o.intercept) rows.emplace_back("fit.intercept", fit.intercept);
  rows.emplace_back("fit.durbin_watson", opt_cell(fit.durbin_watson));
  try {
    const auto ou = implied_ou(fit, o.dt);
    rows.emplace_back("ou.alpha", ou.alpha());
    rows.emplace_back("ou.sigma", ou.sigma());
    rows.emplace_back("ou.stationary_variance", stationary_variance(ou));
  } catch (const DomainError& e) {
    err << "no implied OU process: " << e.what() << '\n';
    for (const char* k : {"ou.alpha", "ou.sigma", "ou.stationary_variance"})
      rows.emplace_back(k, std::monostate{});
  }
  write_kv(sink.stream(), rows, o.common.format, false);
  sink.close();
  return kOk;
}

// =============================================================================
// verify-appendix
// =============================================================================

struct VerifyOpts {
  Common common;
  double tol_hermite = 1e-8;
  double tol_bounds = 1e-15;
  double tol_chain = 1e-6;
  double tol_mc = 0.10;
  double z_max = 3.0;
  bool full = false;
  std::string hermite_normalization = "orthonormal";
  std::optional<std::string> out;
};

void setup_verify(Command& cmd, VerifyOpts& o) {
  cmd.option("tol-hermite", o.tol_hermite, "Orthonormality and cross-moment tolerance");
  cmd.option("tol-bounds", o.tol_bounds, "Slack on the covariance bounds");
  cmd.option("tol-chain", o.tol_chain, "Relative tolerance of the deterministic delta chain");
  cmd.option("tol-mc", o.tol_mc, "Relative tolerance of the Monte-Carlo delta variance");
  cmd.option("z-max", o.z_max, "Standard errors allowed for Monte-Carlo means");
  cmd.flag("full", o.full, "Also run the Monte-Carlo checks");
  cmd.option("hermite-normalization", o.hermite_normalization, "Test hook")
      ->check(CLI::IsMember({"orthonormal", "factorial"}))
      ->group("");
  cmd.option("out", o.out, "Report file (stdout when omitted)");
  add_common(cmd, o.common);
}

struct Check {
  std::string name;
  double achieved;
  double required;
  bool passed() const { return achieved <= required; }
};

std::vector<double> random_unit_vector(std::size_t n, StreamRng& rng) {
  std::vector<double> a(n);
  double norm = 0.0;
  for (auto& v : a) {
    v = rng.normal();
    norm += v * v;
  }
  for (auto& v : a) v /= std::sqrt(norm);
  return a;
}

std::vector<Check> appendix_checks(const VerifyOpts& o, std::uint64_t seed) {
  const auto norm = o.hermite_normalization == "factorial" ? HermiteNormalization::factorial
                                                           : HermiteNormalization::orthonormal;
  std::vector<Check> out;

  const auto rule = gauss_hermite_rule(64);
  double orth = 0.0;
  for (unsigned i = 0; i <= 6; ++i)
    for (unsigned j = 0; j <= 6; ++j) {
      double m = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q)
        m += rule.weights[q] * hermite(i, rule.nodes[q], norm) * hermite(j, rule.nodes[q], norm);
      orth = std::max(orth, std::abs(m - (i == j ? 1.0 : 0.0)));
    }
  out.push_back({"hermite_orthonormality", orth, o.tol_hermite});

  double cross = 0.0;
  for (double beta : {0.1, 0.5, 0.9})
    for (unsigned i = 0; i <= 6; ++i)
      for (unsigned j = 0; j <= 6; ++j) {
        const double expect = i == j ? std::pow(beta, static_cast<double>(i)) : 0.0;
        cross = std::max(cross, std::abs(hermite_cross_moment(i, j, GaussianPair(beta), norm) - expect));
      }
  out.push_back({"hermite_cross_moments", cross, o.tol_hermite});

  double violation = 0.0, brute = 0.0, extremes = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    StreamRng rng(seed, trial);
    const std::size_t N = 1 + static_cast<std::size_t>(rng.uniform() * 6.0) % 6;
    const PolynomialPolicy f(random_unit_vector(N, rng));
    for (double beta : {0.1, 0.5, 0.9}) {
      const double c = polynomial_cov(f, GaussianPair(beta));
      violation = std::max({violation, std::pow(beta, static_cast<double>(N)) - c, c - beta});
      brute = std::max(brute, std::abs(cov_bruteforce(f, GaussianPair(beta)) - c));
    }
  }
  for (std::size_t N = 1; N <= 6; ++N) {
    std::vector<double> e1(N, 0.0), eN(N, 0.0);
    e1.front() = 1.0;
    eN.back() = 1.0;
    for (double beta : {0.1, 0.5, 0.9}) {
      const double bN = std::pow(beta, static_cast<double>(N));
      extremes = std::max({extremes, std::abs(polynomial_cov(PolynomialPolicy(e1), GaussianPair(beta)) - beta) / beta,
                           std::abs(polynomial_cov(PolynomialPolicy(eN), GaussianPair(beta)) - bN) / bN});
    }
  }
  out.push_back({"covariance_bounds", std::max(violation, 0.0), o.tol_bounds});
  out.push_back({"covariance_extremes", extremes, 4.0 * std::numeric_limits<double>::epsilon()});
  out.push_back({"covariance_quadrature", brute, o.tol_hermite});

  const auto p = OUParams::from_stationary(1.0, 1.0);
  for (double S : {0.0, 1.0}) {
    const double f = phi(S, 1.0);
    const double rhs = f * f * psi(S, 1.0, 1.0);
    const double lhs = 2.0 * theta_integral(S, p).value;
    out.push_back({fmt::format("delta_chain_S{}", S), std::abs(lhs / rhs - 1.0), o.tol_chain});
  }

  if (o.full) {
    for (double S : {0.0, 1.0}) {
      const auto est = delta_mean_mc(S, p, 0.05, PathGrid{1e-3, 2000000, seed});
      // The band average targets the mean density over [S, S + band).
      const double target = (std::erf((S + 0.05) / std::numbers::sqrt2) - std::erf(S / std::numbers::sqrt2)) / 0.1;
      out.push_back({fmt::format("delta_mean_S{}", S), std::abs(est.z_against(target)), o.z_max});
    }
    DeltaIntegralSettings ds;
    ds.seed = seed;
    for (double S : {0.0, 1.0}) {
      const auto est = delta_integral_variance_mc(S, p, ds);
      const double f = phi(S, 1.0);
      const double target = f * f * psi(S, 1.0, 1.0);
      out.push_back({fmt::format("delta_variance_S{}", S), std::abs(est.value / target - 1.0), o.tol_mc});
    }
  }
  return out;
}

int run_verify(const Command& cmd, VerifyOpts& o, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(o.common.seed);
  if (o.out) write_manifest(*o.out + ".manifest.json", cmd, seed);
  const auto checks = appendix_checks(o, seed);

  Table t{{"check", "status", "achieved", "required"}, {}};
  std::size_t failed = 0;
  for (const auto& c : checks) {
    t.rows.push_back({c.name, std::string(c.passed() ? "PASS" : "FAIL"), c.achieved, c.required});
    if (!c.passed()) ++failed;
  }
  Sink sink(o.out, out);
  t.write(sink.stream(), o.common.format);
  sink.close();
  if (failed) {
    err << fmt::format("{} of {} checks failed\n", failed, checks.size());
    return kNumerical;
  }
  return kOk;
}

// =============================================================================
// replay
// =============================================================================

struct ReplayOpts {
  std::string manifest;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

std::vector<std::string> replay_args(const ReplayOpts& o) {
  std::ifstream f(o.manifest);
  if (!f) throw IoError(o.manifest, "cannot open for reading");
  json m;
  try {
    m = json::parse(f);
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("{}: not a manifest: {}", o.manifest, e.what()));
  }
  if (!m.contains("command") || !m.contains("parameters") || !m["parameters"].is_object())
    throw DomainError(o.manifest + ": manifest lacks command or parameters");
  const auto command = m["command"].get<std::string>();
  if (command == "replay") throw DomainError("a manifest cannot replay a replay");

  std::vector<std::string> args{command};
  for (const auto& [key, value] : m["parameters"].items()) {
    if ((key == "threads" && o.threads) || (key == "out" && o.out)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else {
      args.push_back("--" + key);
      args.push_back(value.get<std::string>());
    }
  }
  if (o.threads) {
    args.push_back("--threads");
    args.push_back(std::to_string(*o.threads));
  }
  if (o.out) {
    args.push_back("--out");
    args.push_back(*o.out);
  }
  args.push_back("--seed");
  args.push_back(std::to_string(m.at("master_seed").get<std::uint64_t>()));
  return args;
}

int map_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  switch (e.category()) {
    case ErrorCategory::validation: return kValidation;
    case ErrorCategory::numerical: return kNumerical;
    case ErrorCategory::io: return kIo;
  }
  return kUnexpected;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Mean-reverting mispricing: analytics, simulation, backtests and estimation", "convlab");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  AnalyzeOpts analyze;
  SimulateOpts simulate;
  BacktestOpts backtest;
  EstimateOpts estimate;
  VerifyOpts verify;
  ReplayOpts replay;

  Command c_analyze(app, "analyze", "Tabulate threshold-policy rates, optimal leverage and utility");
  setup_analyze(c_analyze, analyze);
  Command c_simulate(app, "simulate", "Simulate a mispricing path and the wealth of a policy");
  setup_simulate(c_simulate, simulate);
  Command c_backtest(app, "backtest", "Grid search over threshold rules on simulated daily data");
  setup_backtest(c_backtest, backtest);
  Command c_estimate(app, "estimate", "Fit an AR(1) to the log price/NAV ratio");
  setup_estimate(c_estimate, estimate);
  Command c_verify(app, "verify-appendix", "Run the Hermite and delta-process oracle checks");
  setup_verify(c_verify, verify);
  auto* c_replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  c_replay->add_option("manifest", replay.manifest, "Manifest JSON")->required();
  c_replay->add_option("--threads", replay.threads, "Override the thread cap");
  c_replay->add_option("--out", replay.out, "Override the output path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (c_replay->parsed()) return run(replay_args(replay), out, err);

    auto threads = [](const Common& c) { set_max_threads(c.threads); };
    if (c_analyze.app()->parsed()) {
      threads(analyze.common);
      return run_analyze(c_analyze, analyze, out, err);
    }
    if (c_simulate.app()->parsed()) {
      threads(simulate.common);
      return run_simulate(c_simulate, simulate, out, err);
    }
    if (c_backtest.app()->parsed()) {
      threads(backtest.common);
      return run_backtest(c_backtest, backtest, out, err);
    }
    if (c_estimate.app()->parsed()) {
      threads(estimate.common);
      return run_estimate(c_estimate, estimate, out, err);
    }
    if (c_verify.app()->parsed()) {
      threads(verify.common);
      return run_verify(c_verify, verify, out, err);
    }
  } catch (const Error& e) {
    return map_error(e, err);
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}

}  // namespace convlab::cli

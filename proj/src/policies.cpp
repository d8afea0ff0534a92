#include "convlab/policies.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "convlab/errors.hpp"
#include "convlab/quadrature.hpp"
#include "convlab/stats.hpp"

namespace convlab {

LinearPolicy::LinearPolicy(double k_) : k(k_) {
  if (!(k_ >= 0.0) || !std::isfinite(k_))
    throw DomainError(fmt::format("linear policy sensitivity must be >= 0, got {}", k_));
}

DifferentiablePolicy::DifferentiablePolicy(Fn f, Fn f_prime, double deriv_bound,
                                           double check_range)
    : f_(std::move(f)), f_prime_(std::move(f_prime)), deriv_bound_(deriv_bound) {
  if (!f_ || !f_prime_) throw DomainError("differentiable policy needs f and f'");
  if (!(deriv_bound > 0.0))
    throw DomainError(fmt::format("derivative bound must be positive, got {}", deriv_bound));
  if (!std::isfinite(f_(0.0))) throw DomainError("policy value at zero must be finite");
  constexpr int kChecks = 2001;
  for (int i = 0; i < kChecks; ++i) {
    const double x = check_range * (2.0 * i / (kChecks - 1) - 1.0);
    const double d = f_prime_(x);
    if (!(std::abs(d) <= deriv_bound * (1.0 + 1e-9)))
      throw DomainError(fmt::format("|f'({})| = {} exceeds bound {}", x, std::abs(d), deriv_bound));
  }
}

DifferentiablePolicy DifferentiablePolicy::with_numeric_derivative(Fn f, double deriv_bound,
                                                                   double check_range) {
  auto fd = [f](double x) {
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    return (f(x + h) - f(x - h)) / (2.0 * h);
  };
  return DifferentiablePolicy(f, fd, deriv_bound, check_range);
}

DifferentiablePolicy DifferentiablePolicy::from_linear(const LinearPolicy& p) {
  const double k = p.k;
  // f == 0 satisfies any bound; keep K positive.
  const double bound = k > 0.0 ? k : 1.0;
  return DifferentiablePolicy([k](double x) { return -k * x; }, [k](double) { return -k; }, bound);
}

ThresholdPolicy::ThresholdPolicy(double open_threshold, double close_threshold, double leverage,
                                 Sidedness sided)
    : open_(open_threshold), close_(close_threshold), leverage_(leverage), sided_(sided) {
  if (!(open_threshold >= 0.0) || !std::isfinite(open_threshold))
    throw DomainError(fmt::format("open threshold must be >= 0, got {}", open_threshold));
  if (!(close_threshold >= 0.0 && close_threshold <= open_threshold))
    throw DomainError(fmt::format("close threshold must lie in [0, {}], got {}", open_threshold,
                                  close_threshold));
  if (!(leverage > 0.0) || !std::isfinite(leverage))
    throw DomainError(fmt::format("threshold leverage must be positive, got {}", leverage));
}

namespace {

std::pair<double, PositionState> threshold_step(const ThresholdPolicy& p, double x,
                                                PositionState state) {
  const double S = p.open_threshold();
  const double s = p.close_threshold();
  // With s == S the rule is memoryless: hold exactly while |x| >= S.
  const bool hysteresis = s < S;
  if (state.sign == -1) {
    if (hysteresis ? x <= s : x < S) state.sign = 0;
  } else if (state.sign == 1) {
    if (hysteresis ? x >= -s : x > -S) state.sign = 0;
  }
  if (state.sign == 0) {
    if (x >= S)
      state.sign = -1;
    else if (p.sided() == Sidedness::two && x <= -S)
      state.sign = 1;
  }
  return {state.sign * p.leverage(), state};
}

}  // namespace

std::pair<double, PositionState> leverage_at(const Policy& policy, double x, PositionState state) {
  return std::visit(
      [&](const auto& p) -> std::pair<double, PositionState> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearPolicy>) {
          return {-p.k * x, state};
        } else if constexpr (std::is_same_v<T, DifferentiablePolicy>) {
          return {p(x), state};
        } else {
          return threshold_step(p, x, state);
        }
      },
      policy);
}

WealthPath wealth_path(const MispricingPath& path, const Policy& policy, double cost) {
  if (!(cost >= 0.0)) throw DomainError(fmt::format("transaction cost must be >= 0, got {}", cost));
  const auto& x = path.values;
  if (x.empty()) throw DomainError("wealth_path needs a non-empty mispricing path");
  const bool is_threshold = std::holds_alternative<ThresholdPolicy>(policy);

  WealthPath out;
  out.values.resize(x.size());
  out.values[0] = 0.0;
  PositionState state;
  double held = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const auto [lev, next] = leverage_at(policy, x[k], state);
    const double change = lev - held;
    if (is_threshold) {
      if (next.sign != state.sign) out.transactions += (state.open() ? 1 : 0) + (next.open() ? 1 : 0);
    } else if (change != 0.0) {
      ++out.transactions;
    }
    const double charge = 0.5 * cost * std::abs(change);
    out.values[k + 1] = out.values[k] + lev * (x[k + 1] - x[k]) - charge;
    state = next;
    held = lev;
  }
  return out;
}

double policy_antiderivative(const DifferentiablePolicy& policy, double xi) {
  if (xi == 0.0) return 0.0;
  auto f = [&policy](double z) { return policy(z); };
  if (xi > 0.0) return integrate(f, 0.0, xi).value;
  return -integrate(f, xi, 0.0).value;
}

RepresentationDiscrepancy representation_check(const MispricingPath& path,
                                               const DifferentiablePolicy& policy,
                                               const OUParams& process) {
  const WealthPath direct = wealth_path(path, Policy{policy}, 0.0);
  const auto& x = path.values;
  const double half_var = 0.5 * process.sigma() * process.sigma();
  const double g0 = policy_antiderivative(policy, x[0]);

  RepresentationDiscrepancy out;
  double sum_sq = 0.0;
  double drift_integral = 0.0;  // left-point Riemann sum of f'(x) dt
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double rep = policy_antiderivative(policy, x[k]) - g0 - half_var * drift_integral;
    const double diff = direct.values[k] - rep;
    out.max_abs = std::max(out.max_abs, std::abs(diff));
    sum_sq += diff * diff;
    drift_integral += policy.derivative(x[k]) * path.grid.dt;
  }
  out.rms = std::sqrt(sum_sq / static_cast<double>(x.size()));
  return out;
}

RepresentationDiscrepancy representation_check(const MispricingPath& path, const Policy& policy,
                                               const OUParams& process) {
  if (const auto* lin = std::get_if<LinearPolicy>(&policy))
    return representation_check(path, DifferentiablePolicy::from_linear(*lin), process);
  if (const auto* diff = std::get_if<DifferentiablePolicy>(&policy))
    return representation_check(path, *diff, process);
  throw UnsupportedPolicyError("representation check needs a differentiable policy");
}

GrowthStats realized_growth_stats(const WealthPath& wealth, double dt) {
  if (wealth.values.size() < 2) throw DomainError("growth statistics need at least one step");
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const auto& u = wealth.values;
  const double horizon = dt * static_cast<double>(u.size() - 1);
  double qv = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) qv += (u[k] - u[k - 1]) * (u[k] - u[k - 1]);
  return {(u.back() - u.front()) / horizon, u.back(), qv / horizon};
}

GrowthAggregate aggregate_growth(const std::vector<GrowthStats>& stats) {
  std::vector<double> g(stats.size());
  std::transform(stats.begin(), stats.end(), g.begin(),
                 [](const GrowthStats& s) { return s.mean_growth; });
  GrowthAggregate out;
  out.n = g.size();
  out.mean = mean(g);
  out.variance = g.size() >= 2 ? sample_variance(g) : 0.0;
  return out;
}

}  // namespace convlab

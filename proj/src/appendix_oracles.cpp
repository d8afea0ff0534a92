#include "convlab/appendix_oracles.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

#include "convlab/analytics.hpp"
#include "convlab/errors.hpp"
#include "convlab/parallel.hpp"
#include "convlab/rng.hpp"

namespace convlab {

double hermite_normalized(unsigned k, double x) {
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = x;
  for (unsigned n = 1; n < k; ++n) {
    const double next = (x * cur - std::sqrt(static_cast<double>(n)) * prev) /
                        std::sqrt(static_cast<double>(n + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

double hermite(unsigned k, double x, HermiteNormalization norm) {
  if (norm == HermiteNormalization::orthonormal) return hermite_normalized(k, x);
  // He_k / k! = (He_k / sqrt(k!)) / sqrt(k!)
  return hermite_normalized(k, x) / std::sqrt(std::tgamma(static_cast<double>(k) + 1.0));
}

PolynomialPolicy::PolynomialPolicy(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw DomainError("polynomial policy needs degree >= 1");
}

double PolynomialPolicy::squared_norm() const {
  double s = 0.0;
  for (double a : coeffs_) s += a * a;
  return s;
}

double PolynomialPolicy::operator()(double x) const {
  // Walk the recurrence once instead of restarting it per degree.
  double prev = 1.0;
  double cur = x;
  double total = coeffs_[0] * cur;
  for (std::size_t n = 1; n < coeffs_.size(); ++n) {
    const double next = (x * cur - std::sqrt(static_cast<double>(n)) * prev) /
                        std::sqrt(static_cast<double>(n + 1));
    prev = cur;
    cur = next;
    total += coeffs_[n] * cur;
  }
  return total;
}

GaussianPair::GaussianPair(double b) : beta(b) {
  if (!(b >= 0.0 && b < 1.0))
    throw DomainError(fmt::format("pair correlation must lie in [0, 1), got {}", b));
}

double polynomial_cov(const PolynomialPolicy& policy, const GaussianPair& pair) {
  double total = 0.0;
  double power = 1.0;
  for (double a : policy.coeffs()) {
    power *= pair.beta;
    total += a * a * power;
  }
  return total;
}

namespace {

/// E[f(x) g(y)] and E[f(x)], E[g(y)] for the correlated pair.
struct PairMoments {
  double cross = 0.0;
  double mean_f = 0.0;
  double mean_g = 0.0;
};

PairMoments pair_moments(const std::function<double(double)>& f,
                         const std::function<double(double)>& g, double beta, std::size_t order) {
  const GaussianPair checked(beta);
  const GaussHermiteRule rule = gauss_hermite_rule(order);
  const double rho = std::sqrt(1.0 - checked.beta * checked.beta);
  PairMoments m;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double z1 = rule.nodes[i];
    const double fx = f(z1);
    double inner = 0.0;  // E[g(y) | x = z1]
    for (std::size_t j = 0; j < rule.size(); ++j)
      inner += rule.weights[j] * g(checked.beta * z1 + rho * rule.nodes[j]);
    m.cross += rule.weights[i] * fx * inner;
    m.mean_f += rule.weights[i] * fx;
    m.mean_g += rule.weights[i] * inner;
  }
  return m;
}

}  // namespace

double cov_bruteforce(const std::function<double(double)>& f, const GaussianPair& pair,
                      std::size_t order) {
  const PairMoments m = pair_moments(f, f, pair.beta, order);
  return m.cross - m.mean_f * m.mean_g;
}

double cov_bruteforce(const PolynomialPolicy& policy, const GaussianPair& pair,
                      std::size_t order) {
  // f(x) f(y) has degree 2N in the first node variable.
  if (order < policy.degree() + 1)
    throw DomainError(fmt::format("Gauss–Hermite order {} cannot integrate degree {} exactly (need {})",
                                  order, 2 * policy.degree(), policy.degree() + 1));
  return cov_bruteforce([&policy](double x) { return policy(x); }, pair, order);
}

double hermite_cross_moment(unsigned i, unsigned j, const GaussianPair& pair,
                            HermiteNormalization norm, std::size_t order) {
  if (order < std::max(i, j) + 1u)
    throw DomainError(fmt::format("Gauss–Hermite order {} too small for degrees {}, {}", order, i, j));
  const PairMoments m = pair_moments([=](double x) { return hermite(i, x, norm); },
                                     [=](double y) { return hermite(j, y, norm); }, pair.beta,
                                     order);
  return m.cross;
}

McEstimate delta_mean_mc(double S, const OUParams& p, double band, const PathGrid& grid) {
  if (!(band > 0.0)) throw DomainError(fmt::format("band width must be positive, got {}", band));
  grid.validate();
  const MispricingPath path = simulate_stationary(p, grid);
  std::vector<double> samples(grid.n_steps);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double x = path.values[k];
    samples[k] = (x >= S && x < S + band) ? 1.0 / band : 0.0;
  }
  return batch_means(samples);
}

namespace {

void require_lag(double tau) {
  if (tau == 0.0 || !std::isfinite(tau))
    throw DomainError("delta second moment is singular at tau = 0");
}

/// -log(1 - a^2)/2 with a = exp(-alpha |tau|), accurate for small tau.
double half_log_decorrelation(double alpha, double tau) {
  return -0.5 * std::log(-std::expm1(-2.0 * alpha * std::abs(tau)));
}

}  // namespace

double delta_second_moment(double S, double tau, const OUParams& p) {
  require_lag(tau);
  const double Sigma = stationary_variance(p);
  const double a = std::exp(-p.alpha() * std::abs(tau));
  return std::exp(half_log_decorrelation(p.alpha(), tau) - S * S / (Sigma * (1.0 + a))) /
         (2.0 * std::numbers::pi * Sigma);
}

double theta(double tau, double S, const OUParams& p) {
  require_lag(tau);
  const double Sigma = stationary_variance(p);
  const double a = std::exp(-p.alpha() * std::abs(tau));
  const double f = phi(S, Sigma);
  return f * f * std::expm1(half_log_decorrelation(p.alpha(), tau) + S * S / Sigma * a / (1.0 + a));
}

double theta_cross(double tau, double S, const OUParams& p) {
  require_lag(tau);
  const double Sigma = stationary_variance(p);
  const double a = std::exp(-p.alpha() * std::abs(tau));
  const double f = phi(S, Sigma);
  // (1 - a) underflows to zero only where the exponent is -inf anyway.
  const double shrink = a < 1.0 ? S * S / Sigma * a / (1.0 - a) : std::numeric_limits<double>::infinity();
  return f * f * std::expm1(half_log_decorrelation(p.alpha(), tau) - shrink);
}

QuadResult theta_integral(double S, const OUParams& p) {
  // Lag in units of the reversion time, alpha tau = v^2, so the quadrature
  // sees the same shape for every alpha.
  const double alpha = p.alpha();
  const double Sigma = stationary_variance(p);
  const double f = phi(S, Sigma);
  auto integrand = [&](double v) {
    // 2 v theta(v^2 / alpha) -> sqrt(2) phi^2 exp(S^2/(2 Sigma)) as v -> 0
    if (v <= 0.0) return std::numbers::sqrt2 * f * f * std::exp(S * S / (2.0 * Sigma));
    return 2.0 * v * theta(v * v / alpha, S, p);
  };
  auto r = integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
  return {r.value / alpha, r.error / alpha};
}

McEstimate delta_integral_variance_mc(double S, const OUParams& p,
                                      const DeltaIntegralSettings& settings) {
  if (!(settings.band > 0.0)) throw DomainError("band width must be positive");
  if (!(settings.horizon > 0.0)) throw DomainError("horizon must be positive");
  const PathGrid grid{settings.dt,
                      static_cast<std::size_t>(std::llround(settings.horizon / settings.dt)),
                      settings.seed};
  grid.validate();
  const Ar1Params step = ou_to_ar1(p, grid.dt);
  const double stationary_sd = std::sqrt(stationary_variance(p));
  const double beta = step.beta();
  const double sd = step.sigma_d();
  const double lo = S;
  const double hi = S + settings.band;

  std::vector<double> integrals(settings.n_realizations);
  parallel_for(settings.n_realizations, [&](std::size_t i) {
    StreamRng rng(grid.seed, i);
    double x = stationary_sd * rng.normal();
    std::size_t hits = 0;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      hits += (x >= lo && x < hi) ? 1 : 0;
      x = beta * x + sd * rng.normal();
    }
    integrals[i] = static_cast<double>(hits) * grid.dt / settings.band;
  });
  McEstimate var = batch_variance(integrals);
  const double T = grid.horizon();
  return {var.value / T, var.std_error / T};
}

VarianceGrowthEstimate variance_growth_rate_mc(const DifferentiablePolicy& policy,
                                               const OUParams& p,
                                               const VarianceGrowthSettings& settings) {
  const PathGrid grid{settings.dt,
                      static_cast<std::size_t>(std::llround(settings.horizon / settings.dt)),
                      settings.seed};
  grid.validate();
  if (settings.checkpoints < 3) throw DomainError("need at least three checkpoints");
  if (settings.n_realizations < 2 * kDefaultBatches)
    throw DomainError(fmt::format("need at least {} realizations", 2 * kDefaultBatches));

  // Checkpoint step indices spread evenly over [n/2, n].
  std::vector<std::size_t> marks(settings.checkpoints);
  std::vector<double> times(settings.checkpoints);
  for (std::size_t c = 0; c < settings.checkpoints; ++c) {
    const std::size_t half = grid.n_steps / 2;
    marks[c] = half + (grid.n_steps - half) * c / (settings.checkpoints - 1);
    times[c] = grid.dt * static_cast<double>(marks[c]);
  }

  const Ar1Params step = ou_to_ar1(p, grid.dt);
  const double stationary_sd = std::sqrt(stationary_variance(p));
  const double half_var = 0.5 * p.sigma() * p.sigma();

  // u[i][c]: log wealth of realization i at checkpoint c.
  std::vector<std::vector<double>> u(settings.n_realizations,
                                     std::vector<double>(settings.checkpoints));
  parallel_for(settings.n_realizations, [&](std::size_t i) {
    StreamRng rng(grid.seed, i);
    double x = stationary_sd * rng.normal();
    const double g0 = policy_antiderivative(policy, x);
    double drift = 0.0;
    double fp = policy.derivative(x);
    std::size_t c = 0;
    for (std::size_t k = 0; k <= grid.n_steps && c < marks.size(); ++k) {
      while (c < marks.size() && marks[c] == k) {
        u[i][c] = policy_antiderivative(policy, x) - g0 - half_var * drift;
        ++c;
      }
      const double next = step.beta() * x + step.sigma_d() * rng.normal();
      const double fp_next = policy.derivative(next);
      drift += 0.5 * (fp + fp_next) * grid.dt;
      x = next;
      fp = fp_next;
    }
  });

  auto variance_curve = [&](std::size_t first, std::size_t count) {
    std::vector<double> curve(settings.checkpoints);
    std::vector<double> column(count);
    for (std::size_t c = 0; c < settings.checkpoints; ++c) {
      for (std::size_t i = 0; i < count; ++i) column[i] = u[first + i][c];
      curve[c] = sample_variance(column);
    }
    return curve;
  };

  VarianceGrowthEstimate out;
  out.slope = ols_slope(times, variance_curve(0, settings.n_realizations));
  const std::size_t per = settings.n_realizations / kDefaultBatches;
  std::vector<double> batch_slopes(kDefaultBatches);
  for (std::size_t b = 0; b < kDefaultBatches; ++b)
    batch_slopes[b] = ols_slope(times, variance_curve(b * per, per));
  // Each batch slope uses 1/kDefaultBatches of the data; the pooled slope's
  // error is the batch spread shrunk by sqrt(batches).
  out.slope_stderr = std::sqrt(sample_variance(batch_slopes) / static_cast<double>(kDefaultBatches));
  const double scale = half_var * half_var;  // sigma^4 / 4
  out.r = out.slope / scale;
  out.r_stderr = out.slope_stderr / scale;
  out.slope_z = out.slope_stderr > 0.0 ? out.slope / out.slope_stderr : 0.0;

  std::vector<double> growth(settings.n_realizations);
  for (std::size_t i = 0; i < settings.n_realizations; ++i) growth[i] = u[i].back() / times.back();
  out.mean_growth = batch_means(growth);
  return out;
}

double derivative_variance(const DifferentiablePolicy& policy, double Sigma) {
  if (!(Sigma > 0.0)) throw DomainError("stationary variance must be positive");
  const double sd = std::sqrt(Sigma);
  const double lim = 12.0 * sd;
  auto density = [sd](double x) {
    return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
  };
  const double m1 = integrate([&](double x) { return policy.derivative(x) * density(x); }, -lim, lim).value;
  const double m2 = integrate(
      [&](double x) {
        const double d = policy.derivative(x) - m1;
        return d * d * density(x);
      },
      -lim, lim).value;
  return m2;
}

}  // namespace convlab

#include "convlab/analytics.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "convlab/errors.hpp"

namespace convlab {

namespace {

void require_sigma(double Sigma) {
  if (!(Sigma > 0.0) || !std::isfinite(Sigma))
    throw DomainError(fmt::format("stationary variance must be positive, got {}", Sigma));
}

void require_threshold(double S) {
  if (!(S >= 0.0) || !std::isfinite(S))
    throw DomainError(fmt::format("threshold must be >= 0, got {}", S));
}

void require_positive_gamma(const RiskPreference& pref) {
  if (pref.gamma == 0.0)
    throw UnboundedLeverageError(
        "gamma = 0: utility is linear in threshold leverage, so no finite optimum exists");
}

}  // namespace

RiskPreference::RiskPreference(double g) : gamma(g) {
  if (!(g >= 0.0) || !std::isfinite(g))
    throw DomainError(fmt::format("risk aversion must be >= 0, got {}", g));
}

double phi(double S, double Sigma) {
  require_sigma(Sigma);
  require_threshold(S);
  return std::exp(-S * S / (2.0 * Sigma)) / std::sqrt(2.0 * std::numbers::pi * Sigma);
}

QuadResult psi_integral(double S, double Sigma) {
  require_sigma(Sigma);
  require_threshold(S);
  const double A = S * S / Sigma;
  // Substituting xi = 1 - w^2 turns the 1/sqrt(1 - xi^2) endpoint singularity
  // into the bounded factor 1/sqrt(2 - w^2).
  auto integrand = [A](double w) {
    const double xi = (1.0 - w) * (1.0 + w);
    if (xi <= 0.0) return 2.0 * A;  // limit at xi -> 0
    const double drift = A * xi / (1.0 + xi);
    if (xi < 0.5) {
      // Bracket is small here; expm1/log1p avoid cancelling 1 against 1.
      const double q = -0.5 * std::log1p(-xi * xi) + drift;
      return 2.0 * w * std::expm1(q) / xi;
    }
    return (2.0 * std::exp(drift) / std::sqrt(2.0 - w * w) - 2.0 * w) / xi;
  };
  return integrate(integrand, 0.0, 1.0, 1e-14);
}

QuadResult psi_with_error(double S, double alpha, double Sigma) {
  if (!(alpha > 0.0)) throw DomainError(fmt::format("alpha must be positive, got {}", alpha));
  const QuadResult j = psi_integral(S, Sigma);
  const double scale = 2.0 / (alpha * std::sqrt(2.0 * std::numbers::pi * Sigma));
  return {scale * j.value, scale * j.error};
}

double psi(double S, double alpha, double Sigma) { return psi_with_error(S, alpha, Sigma).value; }

ThresholdAnalytics threshold_rates(double L, double S, const OUParams& p,
                                   const RiskPreference& pref) {
  if (!(L >= 0.0) || !std::isfinite(L))
    throw DomainError(fmt::format("leverage must be >= 0, got {}", L));
  const double Sigma = stationary_variance(p);
  const double c1 = p.sigma() * p.sigma() * L * phi(S, Sigma);
  const double c2 = c1 * c1 * psi(S, p.alpha(), Sigma);
  return {c1, c2, c1 - pref.gamma * c2};
}

double optimal_leverage_given_S(double S, const OUParams& p, const RiskPreference& pref) {
  require_positive_gamma(pref);
  const double Sigma = stationary_variance(p);
  return 1.0 / (4.0 * pref.gamma * p.alpha() * Sigma * phi(S, Sigma) * psi(S, p.alpha(), Sigma));
}

double reduced_utility(double S, const OUParams& p, const RiskPreference& pref) {
  require_positive_gamma(pref);
  return 1.0 / (4.0 * pref.gamma * psi(S, p.alpha(), stationary_variance(p)));
}

OptimalThreshold optimal_threshold_policy(const OUParams& p, const RiskPreference& pref) {
  require_positive_gamma(pref);
  const double Sigma = stationary_variance(p);
  const double ln2 = std::numbers::ln2;
  return {0.0, std::numbers::pi / (4.0 * pref.gamma * ln2),
          p.alpha() * std::sqrt(2.0 * std::numbers::pi * Sigma) / (8.0 * pref.gamma * ln2)};
}

LinearPolicyRates linear_policy_rates(double k, const OUParams& p) {
  if (!(k >= 0.0)) throw DomainError(fmt::format("sensitivity must be >= 0, got {}", k));
  const double Sigma = stationary_variance(p);
  return {0.5 * p.sigma() * p.sigma() * k, 0.0, 0.5 * k * k * Sigma * Sigma};
}

double gbm_utility(double mu, double sigma, const RiskPreference& pref) {
  return mu - pref.gamma * sigma * sigma;
}

}  // namespace convlab

#pragma once

#include "convlab/process.hpp"
#include "convlab/quadrature.hpp"

namespace convlab {

/// Weight gamma on the variance growth rate; gamma = 0 is the Kelly criterion.
struct RiskPreference {
  explicit RiskPreference(double gamma);
  double gamma;
};

/// Long-run growth (c1) and variance growth (c2) rates of a simple
/// threshold rule, and the utility c1 - gamma c2.
struct ThresholdAnalytics {
  double c1 = 0.0;
  double c2 = 0.0;
  double utility = 0.0;
};

/// Stationary density N(0, Sigma) at S.
double phi(double S, double Sigma);

/// The variance-rate factor
///   psi(S) = 1/sqrt(2 pi Sigma) * (2/alpha) * int_0^1 (1/xi) [ exp(S^2/Sigma * xi/(1+xi)) / sqrt(1-xi^2) - 1 ] dxi
/// evaluated by adaptive quadrature.
double psi(double S, double alpha, double Sigma);

/// psi with the quadrature error estimate (scaled the same way as the value).
QuadResult psi_with_error(double S, double alpha, double Sigma);

/// The dimensionless integral J(S) inside psi:
///   int_0^1 (1/xi) [ exp(A xi/(1+xi)) / sqrt(1-xi^2) - 1 ] dxi, A = S^2/Sigma.
/// J(0) = ln 2.
QuadResult psi_integral(double S, double Sigma);

ThresholdAnalytics threshold_rates(double L, double S, const OUParams& p,
                                   const RiskPreference& pref);

/// L(S) = 1 / (4 gamma alpha Sigma phi(S) psi(S)). Throws UnboundedLeverageError for gamma = 0.
double optimal_leverage_given_S(double S, const OUParams& p, const RiskPreference& pref);

/// U(S) = 1 / (4 gamma psi(S)).
double reduced_utility(double S, const OUParams& p, const RiskPreference& pref);

struct OptimalThreshold {
  double S = 0.0;
  double L = 0.0;
  double U = 0.0;
};

/// The utility-maximizing simple threshold rule: S = 0, L = pi / (4 gamma ln 2),
/// U = alpha sqrt(2 pi Sigma) / (8 gamma ln 2).
OptimalThreshold optimal_threshold_policy(const OUParams& p, const RiskPreference& pref);

struct LinearPolicyRates {
  double growth = 0.0;             // sigma^2 k / 2 per unit time
  double variance_rate = 0.0;      // always 0
  double long_run_variance = 0.0;  // k^2 Sigma^2 / 2
};

LinearPolicyRates linear_policy_rates(double k, const OUParams& p);

/// mu - gamma sigma^2 for wealth following geometric Brownian motion.
double gbm_utility(double mu, double sigma, const RiskPreference& pref);

}  // namespace convlab

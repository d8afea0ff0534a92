#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "convlab/policies.hpp"
#include "convlab/process.hpp"
#include "convlab/quadrature.hpp"
#include "convlab/stats.hpp"

namespace convlab {

// ---------------------------------------------------------------------------
// Hermite covariance bounds for functions of a correlated Gaussian pair.
// ---------------------------------------------------------------------------

/// orthonormal: He_k / sqrt(k!), unit variance under N(0, 1).
/// factorial:   He_k / k!, the literal Rodrigues-with-1/k! form. Not
///              orthonormal for k >= 2; kept as a negative control.
enum class HermiteNormalization { orthonormal, factorial };

/// Probabilists' Hermite polynomial He_k(x) / sqrt(k!), via the three-term recurrence.
double hermite_normalized(unsigned k, double x);

double hermite(unsigned k, double x, HermiteNormalization norm);

/// f(x) = sum_{k=1}^{N} a_k H_k(x) in the orthonormal basis; coeffs[0] is a_1.
class PolynomialPolicy {
 public:
  explicit PolynomialPolicy(std::vector<double> coeffs);

  std::size_t degree() const { return coeffs_.size(); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double squared_norm() const;
  double operator()(double x) const;

 private:
  std::vector<double> coeffs_;
};

/// Standard normal pair with Cov(x, y) = beta.
struct GaussianPair {
  explicit GaussianPair(double beta);
  double beta;
};

/// sum a_k^2 beta^k.
double polynomial_cov(const PolynomialPolicy& policy, const GaussianPair& pair);

/// Cov(f(x), f(y)) by tensor-product Gauss–Hermite quadrature over the pair.
/// Throws DomainError when `order` cannot integrate the polynomial exactly.
double cov_bruteforce(const PolynomialPolicy& policy, const GaussianPair& pair,
                      std::size_t order = 64);

/// Same quadrature for an arbitrary function (no exactness guarantee).
double cov_bruteforce(const std::function<double(double)>& f, const GaussianPair& pair,
                      std::size_t order = 64);

/// E[H_i(x) H_j(y)] by tensor-product quadrature.
double hermite_cross_moment(unsigned i, unsigned j, const GaussianPair& pair,
                            HermiteNormalization norm = HermiteNormalization::orthonormal,
                            std::size_t order = 64);

// ---------------------------------------------------------------------------
// Occupation density of the mispricing at a level S.
// ---------------------------------------------------------------------------

/// Time average of (1/band) 1{x_t in [S, S + band)} over a stationary path.
/// Error bar by batch means.
McEstimate delta_mean_mc(double S, const OUParams& p, double band, const PathGrid& grid);

/// E[delta_S(x_t1) delta_S(x_t2)] for |t2 - t1| = tau. tau = 0 is singular and rejected.
double delta_second_moment(double S, double tau, const OUParams& p);

/// Covariance of the level-S delta process at lag tau.
double theta(double tau, double S, const OUParams& p);

/// Lag covariance of delta_S(x_t1) and delta_{-S}(x_t2).
double theta_cross(double tau, double S, const OUParams& p);

/// int_0^inf theta(tau, S) dtau by quadrature in v, alpha tau = v^2 (removes the
/// 1/sqrt(tau) singularity at the origin).
QuadResult theta_integral(double S, const OUParams& p);

struct DeltaIntegralSettings {
  double horizon = 100.0;  // T per realization
  double band = 0.05;      // indicator width
  double dt = 1e-3;
  std::size_t n_realizations = 1000;
  std::uint64_t seed = 1;
};

/// Var over realizations of int_0^T (1/band) 1{x_t in [S, S + band)} dt, divided by T.
McEstimate delta_integral_variance_mc(double S, const OUParams& p,
                                      const DeltaIntegralSettings& settings);

// ---------------------------------------------------------------------------
// Variance growth of log wealth under differentiable policies.
// ---------------------------------------------------------------------------

struct VarianceGrowthSettings {
  double horizon = 500.0;
  double dt = 0.01;
  std::size_t n_realizations = 200;
  std::uint64_t seed = 1;
  std::size_t checkpoints = 50;  // sample times spread over the latter half
};

struct VarianceGrowthEstimate {
  double slope = 0.0;         // d Var(u_t) / dt over the latter half
  double slope_stderr = 0.0;  // batch means over realizations
  double r = 0.0;             // slope / (sigma^4 / 4)
  double r_stderr = 0.0;
  double slope_z = 0.0;
  McEstimate mean_growth;     // E(u_T) / T
};

/// Monte-Carlo estimate of the variance growth rate r. Log wealth is
/// evaluated through u_t = g(x_t) - g(x_0) - (sigma^2/2) int_0^t f'(x) ds
/// (trapezoid rule), the continuous-time identity for du = f(x) dx.
VarianceGrowthEstimate variance_growth_rate_mc(const DifferentiablePolicy& policy,
                                               const OUParams& p,
                                               const VarianceGrowthSettings& settings);

/// Var(f'(x)) for x ~ N(0, Sigma), by adaptive quadrature.
double derivative_variance(const DifferentiablePolicy& policy, double Sigma);

}  // namespace convlab

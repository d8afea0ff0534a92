#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace convlab {

/// Continuous mean-reverting mispricing dx = -alpha x dt + sigma dz.
class OUParams {
 public:
  OUParams(double alpha, double sigma);

  /// Builds the process with a given long-run variance Sigma = sigma^2 / (2 alpha).
  static OUParams from_stationary(double alpha, double stationary_variance);

  double alpha() const { return alpha_; }
  double sigma() const { return sigma_; }

  friend bool operator==(const OUParams&, const OUParams&) = default;

 private:
  double alpha_;
  double sigma_;
};

/// One-step AR(1) x_t = beta x_{t-1} + sigma_d eps_t, 0 < beta < 1.
class Ar1Params {
 public:
  Ar1Params(double beta, double sigma_d);

  double beta() const { return beta_; }
  double sigma_d() const { return sigma_d_; }
  double stationary_variance() const;

  friend bool operator==(const Ar1Params&, const Ar1Params&) = default;

 private:
  double beta_;
  double sigma_d_;
};

struct PathGrid {
  double dt = 1.0;
  std::size_t n_steps = 1;
  std::uint64_t seed = 0;

  /// Throws DomainError unless dt > 0 and n_steps >= 1.
  void validate() const;
  double horizon() const { return dt * static_cast<double>(n_steps); }
};

/// A realization on the grid: values[k] is x at time k * dt, n_steps + 1 entries.
struct MispricingPath {
  PathGrid grid;
  std::vector<double> values;

  double time(std::size_t k) const { return grid.dt * static_cast<double>(k); }
};

double stationary_variance(const OUParams& p);

/// Exact discretization: beta = exp(-alpha dt), sigma_d^2 = Sigma (1 - beta^2).
Ar1Params ou_to_ar1(const OUParams& p, double dt);

/// Inverse of ou_to_ar1.
OUParams ar1_to_ou(const Ar1Params& p, double dt);

/// Sigma * exp(-alpha |tau|).
double autocovariance(const OUParams& p, double tau);

/// Exact-discretization path started at x0, drawing from stream (grid.seed, stream).
MispricingPath simulate(const OUParams& p, const PathGrid& grid, double x0 = 0.0,
                        std::uint64_t stream = 0);

/// As simulate, with x0 drawn from the stationary law N(0, Sigma).
MispricingPath simulate_stationary(const OUParams& p, const PathGrid& grid,
                                   std::uint64_t stream = 0);

/// AR(1) path on a grid whose dt only labels the time axis.
MispricingPath simulate(const Ar1Params& p, const PathGrid& grid, double x0 = 0.0,
                        std::uint64_t stream = 0);
MispricingPath simulate_stationary(const Ar1Params& p, const PathGrid& grid,
                                   std::uint64_t stream = 0);

}  // namespace convlab

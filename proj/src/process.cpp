#include "convlab/process.hpp"

#include <cmath>
#include <fmt/format.h>

#include "convlab/errors.hpp"
#include "convlab/rng.hpp"

namespace convlab {

OUParams::OUParams(double alpha, double sigma) : alpha_(alpha), sigma_(sigma) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DomainError(fmt::format("OU alpha must be positive, got {}", alpha));
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError(fmt::format("OU sigma must be positive, got {}", sigma));
}

OUParams OUParams::from_stationary(double alpha, double stationary_variance) {
  if (!(stationary_variance > 0.0))
    throw DomainError(fmt::format("stationary variance must be positive, got {}",
                                  stationary_variance));
  return OUParams(alpha, std::sqrt(2.0 * alpha * stationary_variance));
}

Ar1Params::Ar1Params(double beta, double sigma_d) : beta_(beta), sigma_d_(sigma_d) {
  if (!(beta > 0.0 && beta < 1.0))
    throw DomainError(fmt::format("AR(1) beta must lie in (0, 1), got {}", beta));
  if (!(sigma_d > 0.0) || !std::isfinite(sigma_d))
    throw DomainError(fmt::format("AR(1) sigma_d must be positive, got {}", sigma_d));
}

double Ar1Params::stationary_variance() const {
  return sigma_d_ * sigma_d_ / -std::expm1(2.0 * std::log(beta_));
}

void PathGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw DomainError(fmt::format("time step must be positive, got {}", dt));
  if (n_steps < 1) throw DomainError("path needs at least one step");
}

double stationary_variance(const OUParams& p) {
  return p.sigma() * p.sigma() / (2.0 * p.alpha());
}

Ar1Params ou_to_ar1(const OUParams& p, double dt) {
  if (!(dt > 0.0)) throw DomainError(fmt::format("time step must be positive, got {}", dt));
  const double beta = std::exp(-p.alpha() * dt);
  // 1 - beta^2 = -expm1(-2 alpha dt), accurate when alpha dt is small.
  const double var = stationary_variance(p) * -std::expm1(-2.0 * p.alpha() * dt);
  return Ar1Params(beta, std::sqrt(var));
}

OUParams ar1_to_ou(const Ar1Params& p, double dt) {
  if (!(dt > 0.0)) throw DomainError(fmt::format("time step must be positive, got {}", dt));
  const double alpha = -std::log(p.beta()) / dt;
  return OUParams::from_stationary(alpha, p.stationary_variance());
}

double autocovariance(const OUParams& p, double tau) {
  return stationary_variance(p) * std::exp(-p.alpha() * std::abs(tau));
}

namespace {

MispricingPath recurse(double beta, double sigma_d, const PathGrid& grid, double x0,
                       bool stationary_start, double stationary_sd, std::uint64_t stream) {
  grid.validate();
  StreamRng rng(grid.seed, stream);
  MispricingPath path{grid, {}};
  path.values.resize(grid.n_steps + 1);
  double x = stationary_start ? stationary_sd * rng.normal() : x0;
  path.values[0] = x;
  for (std::size_t k = 1; k <= grid.n_steps; ++k) {
    x = beta * x + sigma_d * rng.normal();
    path.values[k] = x;
  }
  return path;
}

}  // namespace

MispricingPath simulate(const OUParams& p, const PathGrid& grid, double x0, std::uint64_t stream) {
  grid.validate();
  return simulate(ou_to_ar1(p, grid.dt), grid, x0, stream);
}

MispricingPath simulate_stationary(const OUParams& p, const PathGrid& grid, std::uint64_t stream) {
  grid.validate();
  return simulate_stationary(ou_to_ar1(p, grid.dt), grid, stream);
}

MispricingPath simulate(const Ar1Params& p, const PathGrid& grid, double x0, std::uint64_t stream) {
  if (!std::isfinite(x0)) throw DomainError("initial mispricing must be finite");
  return recurse(p.beta(), p.sigma_d(), grid, x0, false, 0.0, stream);
}

MispricingPath simulate_stationary(const Ar1Params& p, const PathGrid& grid,
                                   std::uint64_t stream) {
  return recurse(p.beta(), p.sigma_d(), grid, 0.0, true, std::sqrt(p.stationary_variance()),
                 stream);
}

}  // namespace convlab

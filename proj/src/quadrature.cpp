#include "convlab/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fmt/format.h>

#include "convlab/errors.hpp"

namespace convlab {

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  constexpr unsigned kMaxDepth = 30;
  double error = 0.0;
  double l1 = 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double value = 0.0;
  if (std::isfinite(a) && std::isfinite(b)) {
    // Map to [-1, 1] here: Boost's own affine map loses relative accuracy on
    // very short intervals and then refines to full depth.
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    auto mapped = [&](double t) { return half * f(half * t + mid); };
    value = GK::integrate(mapped, -1.0, 1.0, kMaxDepth, rel_tol, &error, &l1);
  } else {
    value = GK::integrate(f, a, b, kMaxDepth, rel_tol, &error, &l1);
  }
  if (!std::isfinite(value))
    throw NumericalError("quadrature produced a non-finite value", error);
  // Boost reports error relative to the L1 norm; allow a small floor for
  // integrals that vanish identically.
  if (error > 10.0 * rel_tol * l1 + 1e-300) {
    throw NumericalError(
        fmt::format("quadrature did not converge: estimated error {:.3g} vs |f| mass {:.3g}",
                    error, l1),
        error);
  }
  return {value, error};
}

GaussHermiteRule gauss_hermite_rule(std::size_t n) {
  if (n == 0) throw DomainError("Gauss–Hermite rule needs at least one node");
  // Golub–Welsch: the Jacobi matrix of the probabilists' Hermite recurrence
  // He_{k+1} = x He_k - k He_{k-1} has zero diagonal and off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double off = std::sqrt(static_cast<double>(k));
    const auto i = static_cast<Eigen::Index>(k);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success)
    throw NumericalError("Gauss–Hermite eigen-decomposition failed", 0.0);

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    rule.nodes[i] = solver.eigenvalues()(col);
    const double v0 = solver.eigenvectors()(0, col);
    rule.weights[i] = v0 * v0;
  }
  // Symmetrise: the rule is exactly symmetric about zero in exact arithmetic.
  for (std::size_t i = 0, j = n - 1; i < j; ++i, --j) {
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace convlab

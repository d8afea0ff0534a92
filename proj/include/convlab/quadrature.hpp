#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace convlab {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
};

/// Adaptive Gauss–Kronrod integration over [a, b]; b may be +infinity.
/// Throws NumericalError (carrying the achieved error) when the estimate
/// does not meet rel_tol relative to the integral of |f|.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-12);

/// Gauss–Hermite rule for the standard normal weight exp(-x^2/2)/sqrt(2 pi).
/// Weights sum to one, so sum_i w_i g(x_i) approximates E[g(Z)], exactly for
/// polynomials of degree <= 2n - 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  /// Highest polynomial degree integrated exactly.
  std::size_t exact_degree() const { return 2 * nodes.size() - 1; }
};

GaussHermiteRule gauss_hermite_rule(std::size_t n);

}  // namespace convlab

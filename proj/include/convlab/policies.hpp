#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "convlab/process.hpp"

namespace convlab {

/// f(x) = -k x.
struct LinearPolicy {
  explicit LinearPolicy(double k);
  double k;
};

/// A C^1 leverage rule with |f'| <= deriv_bound.
class DifferentiablePolicy {
 public:
  using Fn = std::function<double(double)>;

  /// Checks |f'(x)| <= K on a dense grid over [-check_range, check_range].
  DifferentiablePolicy(Fn f, Fn f_prime, double deriv_bound, double check_range = 10.0);

  /// Uses a central difference with step 1e-6 * max(1, |x|) for f'.
  static DifferentiablePolicy with_numeric_derivative(Fn f, double deriv_bound,
                                                      double check_range = 10.0);

  static DifferentiablePolicy from_linear(const LinearPolicy& p);

  double operator()(double x) const { return f_(x); }
  double derivative(double x) const { return f_prime_(x); }
  double deriv_bound() const { return deriv_bound_; }

 private:
  Fn f_;
  Fn f_prime_;
  double deriv_bound_;
};

enum class Sidedness { one, two };

/// Opens a fixed leverage L when the mispricing crosses S, closes when it
/// returns inside s. One-sided rules only sell an overpriced asset (x >= S).
class ThresholdPolicy {
 public:
  ThresholdPolicy(double open_threshold, double close_threshold, double leverage,
                  Sidedness sided = Sidedness::two);

  double open_threshold() const { return open_; }
  double close_threshold() const { return close_; }
  double leverage() const { return leverage_; }
  Sidedness sided() const { return sided_; }
  bool simple() const { return close_ == open_; }

  ThresholdPolicy with_leverage(double leverage) const {
    return ThresholdPolicy(open_, close_, leverage, sided_);
  }

 private:
  double open_;
  double close_;
  double leverage_;
  Sidedness sided_;
};

/// Hysteresis memory of a threshold rule. sign is the direction of the
/// leverage held: -1 short the mispriced asset, +1 long, 0 flat.
struct PositionState {
  int sign = 0;
  bool open() const { return sign != 0; }
  PositionState mirrored() const { return {-sign}; }
  friend bool operator==(const PositionState&, const PositionState&) = default;
};

using Policy = std::variant<LinearPolicy, DifferentiablePolicy, ThresholdPolicy>;

/// Leverage held at mispricing x and the updated state. Only threshold rules
/// read or change the state.
std::pair<double, PositionState> leverage_at(const Policy& policy, double x, PositionState state);

struct WealthPath {
  std::vector<double> values;    // log wealth u_k, u_0 = 0
  std::size_t transactions = 0;  // position opens plus closes (or leverage changes)
};

/// Left-point log-wealth recursion u_{k+1} = u_k + f_k (x_{k+1} - x_k) - charge_k.
/// cost is the round-trip cost c: changing leverage by d charges c |d| / 2.
WealthPath wealth_path(const MispricingPath& path, const Policy& policy, double cost = 0.0);

struct RepresentationDiscrepancy {
  double max_abs = 0.0;
  double rms = 0.0;
};

/// Compares wealth_path against u_0 + g(x_t) - g(x_0) - (sigma^2/2) int f'(x) dt,
/// g being the antiderivative of f with g(0) = 0.
RepresentationDiscrepancy representation_check(const MispricingPath& path,
                                               const DifferentiablePolicy& policy,
                                               const OUParams& process);

/// Throws UnsupportedPolicyError for threshold rules.
RepresentationDiscrepancy representation_check(const MispricingPath& path, const Policy& policy,
                                               const OUParams& process);

/// g(xi) = integral of f from 0 to xi.
double policy_antiderivative(const DifferentiablePolicy& policy, double xi);

struct GrowthStats {
  double mean_growth = 0.0;           // (u_T - u_0) / T
  double terminal = 0.0;              // u_T
  double variance_contribution = 0.0; // realized quadratic variation of u per unit time
};

GrowthStats realized_growth_stats(const WealthPath& wealth, double dt);

/// Across-realization mean and sample variance of mean growth; order-free.
struct GrowthAggregate {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t n = 0;
};

GrowthAggregate aggregate_growth(const std::vector<GrowthStats>& stats);

}  // namespace convlab

#include <algorithm>
#include <cmath>
#include <gtest/gtest.h>
#include <random>
#include <vector>

#include "convlab/errors.hpp"
#include "convlab/policies.hpp"
#include "convlab/process.hpp"

using namespace convlab;

namespace {

MispricingPath make_path(std::vector<double> xs, double dt = 1.0) {
  MispricingPath p;
  p.grid = PathGrid{dt, xs.size() - 1, 0};
  p.values = std::move(xs);
  return p;
}

DifferentiablePolicy tanh_policy() {
  return DifferentiablePolicy([](double x) { return -std::tanh(x); },
                              [](double x) {
                                const double c = std::cosh(x);
                                return -1.0 / (c * c);
                              },
                              1.0);
}

}  // namespace

// =============================================================================
// leverage_at
// =============================================================================

TEST(Policies, LinearLeverage) {
  const auto [lev, st] = leverage_at(Policy{LinearPolicy(2.0)}, 0.01, {});
  EXPECT_DOUBLE_EQ(lev, -0.02);
  EXPECT_FALSE(st.open());
}

TEST(Policies, SimpleThresholdOpensAtS) {
  const ThresholdPolicy p(0.01, 0.01, 5.0);
  const auto [lev, st] = leverage_at(Policy{p}, 0.02, {});
  EXPECT_DOUBLE_EQ(lev, -5.0);
  EXPECT_TRUE(st.open());
  EXPECT_EQ(st.sign, -1);
  EXPECT_DOUBLE_EQ(leverage_at(Policy{p}, 0.01, {}).first, -5.0);  // |x| >= S inclusive
}

TEST(Policies, HysteresisTransitionTable) {
  const Policy p{ThresholdPolicy(0.01, 0.005, 5.0)};
  // Between s and S: whatever was held persists.
  EXPECT_EQ(leverage_at(p, 0.007, {-1}), std::make_pair(-5.0, PositionState{-1}));
  EXPECT_EQ(leverage_at(p, 0.007, {0}), std::make_pair(0.0, PositionState{0}));
  EXPECT_EQ(leverage_at(p, -0.007, {1}), std::make_pair(5.0, PositionState{1}));
  EXPECT_EQ(leverage_at(p, -0.007, {0}), std::make_pair(0.0, PositionState{0}));
  // Inside s: closes.
  EXPECT_EQ(leverage_at(p, 0.004, {-1}), std::make_pair(0.0, PositionState{0}));
  EXPECT_EQ(leverage_at(p, 0.005, {-1}), std::make_pair(0.0, PositionState{0}));
  EXPECT_EQ(leverage_at(p, -0.004, {1}), std::make_pair(0.0, PositionState{0}));
  // Beyond S: opens, and a held position on the far side flips.
  EXPECT_EQ(leverage_at(p, 0.012, {0}), std::make_pair(-5.0, PositionState{-1}));
  EXPECT_EQ(leverage_at(p, -0.012, {-1}), std::make_pair(5.0, PositionState{1}));
}

TEST(Policies, OneSidedNeverGoesLong) {
  const Policy p{ThresholdPolicy(0.01, 0.0, 1.0, Sidedness::one)};
  EXPECT_DOUBLE_EQ(leverage_at(p, -0.5, {}).first, 0.0);
  EXPECT_DOUBLE_EQ(leverage_at(p, 0.5, {}).first, -1.0);
}

TEST(Policies, ThresholdValidation) {
  EXPECT_THROW(ThresholdPolicy(0.01, 0.02, 1.0), DomainError);
  EXPECT_THROW(ThresholdPolicy(0.01, -0.001, 1.0), DomainError);
  EXPECT_THROW(ThresholdPolicy(0.01, 0.0, 0.0), DomainError);
  EXPECT_THROW(LinearPolicy(-1.0), DomainError);
  EXPECT_TRUE(ThresholdPolicy(0.01, 0.01, 1.0).simple());
  EXPECT_FALSE(ThresholdPolicy(0.01, 0.0, 1.0).simple());
}

TEST(Policies, DerivativeBoundEnforced) {
  EXPECT_THROW(DifferentiablePolicy([](double x) { return -3.0 * x; }, [](double) { return -3.0; }, 2.0),
               DomainError);
  EXPECT_NO_THROW(tanh_policy());
}

TEST(Policies, NumericDerivativeMatchesSupplied) {
  const auto exact = tanh_policy();
  const auto numeric =
      DifferentiablePolicy::with_numeric_derivative([](double x) { return -std::tanh(x); }, 1.0);
  for (double x = -5.0; x <= 5.0; x += 0.37)
    EXPECT_NEAR(numeric.derivative(x), exact.derivative(x), 1e-8) << x;
}

TEST(Policies, AntisymmetryProperty) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> n(0.0, 0.02);
  const std::vector<Policy> policies{
      Policy{LinearPolicy(3.0)}, Policy{tanh_policy()},
      Policy{ThresholdPolicy(0.01, 0.01, 2.0)}, Policy{ThresholdPolicy(0.015, 0.005, 2.0)},
      Policy{ThresholdPolicy(0.01, 0.0, 1.5)}};
  for (const auto& pol : policies) {
    for (int i = 0; i < 500; ++i) {
      const double x = n(gen);
      const PositionState st{static_cast<int>(gen() % 3) - 1};
      const auto [a, sa] = leverage_at(pol, x, st);
      const auto [b, sb] = leverage_at(pol, -x, st.mirrored());
      EXPECT_DOUBLE_EQ(b, -a);
      EXPECT_EQ(sb, sa.mirrored());
    }
  }
}

// =============================================================================
// wealth_path
// =============================================================================

TEST(Policies, ZeroPolicyGivesZeroWealth) {
  const auto path = simulate(OUParams(0.5, 0.01), PathGrid{1.0, 500, 1}, 0.0);
  for (double c : {0.0, 0.0025}) {
    const auto w = wealth_path(path, Policy{LinearPolicy(0.0)}, c);
    EXPECT_TRUE(std::all_of(w.values.begin(), w.values.end(), [](double u) { return u == 0.0; }));
    EXPECT_EQ(w.transactions, 0u);
  }
  // A threshold above the path's range never trades.
  const auto w = wealth_path(path, Policy{ThresholdPolicy(1.0, 1.0, 1.0)}, 0.01);
  EXPECT_TRUE(std::all_of(w.values.begin(), w.values.end(), [](double u) { return u == 0.0; }));
}

TEST(Policies, LinearTwoStepHandComputation) {
  const double k = 3.0, h = 0.1;
  const auto w = wealth_path(make_path({0.0, h, 0.0}), Policy{LinearPolicy(k)});
  EXPECT_DOUBLE_EQ(w.values[0], 0.0);
  EXPECT_DOUBLE_EQ(w.values[1], 0.0);
  EXPECT_NEAR(w.values[2], k * h * h, 1e-15);
}

TEST(Policies, ThresholdFivePointWalk) {
  // Crosses S at 0.012, exits at 0.004.
  const auto path = make_path({0.0, 0.012, 0.015, 0.004, 0.0});
  const auto w = wealth_path(path, Policy{ThresholdPolicy(0.01, 0.01, 1.0)}, 0.0);
  // Held -1 over steps 1 and 2 (x_1 = 0.012, x_2 = 0.015), flat otherwise.
  EXPECT_NEAR(w.values.back(), 0.012 - 0.004, 1e-15);
  EXPECT_EQ(w.transactions, 2u);
  // Each open and each close pays half the round-trip cost.
  const auto wc = wealth_path(path, Policy{ThresholdPolicy(0.01, 0.01, 1.0)}, 0.002);
  EXPECT_NEAR(wc.values.back(), 0.008 - 0.002, 1e-15);
  const auto wl = wealth_path(path, Policy{ThresholdPolicy(0.01, 0.01, 4.0)}, 0.002);
  EXPECT_NEAR(wl.values.back(), 4.0 * (0.008 - 0.002), 1e-15);
}

TEST(Policies, FlipWithinOneStepChargesBothLegs) {
  const auto path = make_path({0.02, -0.02, -0.02});
  const auto w = wealth_path(path, Policy{ThresholdPolicy(0.01, 0.0, 1.0)}, 0.002);
  EXPECT_EQ(w.transactions, 3u);  // open short, close, open long
  // Step 0: open -1 at cost 0.001, gain 0.04. Step 1: change of 2 costs 0.002.
  EXPECT_NEAR(w.values.back(), 0.04 - 0.001 - 0.002, 1e-15);
}

TEST(Policies, TransactionsMatchCrossingCount) {
  const auto path = simulate(OUParams(0.5, 0.01), PathGrid{1.0, 5000, 17}, 0.0);
  const double S = 0.008;
  std::size_t crossings = 0;
  bool inside = true;  // |x| < S
  int side = 0;
  for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
    const double x = path.values[k];
    const bool now_inside = std::abs(x) < S;
    const int now_side = now_inside ? 0 : (x > 0 ? 1 : -1);
    if (now_side != side) {
      crossings += (inside ? 0 : 1) + (now_inside ? 0 : 1);
    }
    inside = now_inside;
    side = now_side;
  }
  const auto w = wealth_path(path, Policy{ThresholdPolicy(S, S, 1.0)}, 0.0);
  EXPECT_EQ(w.transactions, crossings);
  EXPECT_GT(crossings, 100u);
}

TEST(Policies, CostMonotonicity) {
  const auto path = simulate(OUParams(0.5, 0.01), PathGrid{1.0, 2000, 5}, 0.0);
  const Policy p{ThresholdPolicy(0.01, 0.0, 1.0)};
  double prev = wealth_path(path, p, 0.0).values.back();
  for (double c : {0.0005, 0.001, 0.0025, 0.01}) {
    const double u = wealth_path(path, p, c).values.back();
    EXPECT_LE(u, prev);
    prev = u;
  }
}

TEST(Policies, NegativeCostRejected) {
  EXPECT_THROW(wealth_path(make_path({0.0, 0.1}), Policy{LinearPolicy(1.0)}, -0.1), DomainError);
}

// =============================================================================
// Representation formula
// =============================================================================

TEST(Policies, RepresentationZeroPolicy) {
  const OUParams p(1.0, 1.0);
  const auto path = simulate(p, PathGrid{0.01, 500, 2}, 0.3);
  const auto d = representation_check(path, Policy{LinearPolicy(0.0)}, p);
  EXPECT_DOUBLE_EQ(d.max_abs, 0.0);
}

TEST(Policies, RepresentationLinearClosedForm) {
  const OUParams p(1.0, 1.0);
  const double k = 2.0, dt = 1e-3;
  const auto path = simulate(p, PathGrid{dt, 20000, 4}, 0.1);
  const auto w = wealth_path(path, Policy{LinearPolicy(k)});
  const double x0 = path.values.front();
  const double T = path.grid.horizon();
  // Closed form u_t = -k (x_t^2 - x_0^2)/2 + (sigma^2/2) k t; the gap is
  // (k/2)(realized quadratic variation - sigma^2 t), of size k sigma^2 sqrt(t dt / 2).
  const double tol = 6.0 * k * p.sigma() * p.sigma() * std::sqrt(T * dt / 2.0);
  for (std::size_t i = 0; i < path.values.size(); i += 997) {
    const double t = path.time(i);
    const double xt = path.values[i];
    const double closed = -k * (xt * xt - x0 * x0) / 2.0 + 0.5 * p.sigma() * p.sigma() * k * t;
    EXPECT_NEAR(w.values[i], closed, tol) << "t = " << t;
  }
  EXPECT_LT(representation_check(path, Policy{LinearPolicy(k)}, p).max_abs, tol);
}

TEST(Policies, RepresentationConvergesAtHalfOrder) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  const auto f = tanh_policy();
  const std::vector<double> dts{1e-2, 5e-3, 2.5e-3};
  std::vector<double> log_dt, log_rms;
  for (double dt : dts) {
    double acc = 0.0;
    constexpr int kSeeds = 100;
    for (int s = 0; s < kSeeds; ++s) {
      const auto n = static_cast<std::size_t>(2.0 / dt);
      const auto path = simulate_stationary(p, PathGrid{dt, n, 100u + static_cast<unsigned>(s)});
      acc += representation_check(path, f, p).rms;
    }
    log_dt.push_back(std::log(dt));
    log_rms.push_back(std::log(acc / kSeeds));
  }
  const double slope = (log_rms.back() - log_rms.front()) / (log_dt.back() - log_dt.front());
  EXPECT_NEAR(slope, 0.5, 0.15);
}

TEST(Policies, RepresentationRejectsThresholds) {
  const OUParams p(1.0, 1.0);
  const auto path = simulate(p, PathGrid{0.01, 10, 2}, 0.0);
  EXPECT_THROW(representation_check(path, Policy{ThresholdPolicy(0.5, 0.5, 1.0)}, p),
               UnsupportedPolicyError);
}

TEST(Policies, AntiderivativeOfLinear) {
  const auto f = DifferentiablePolicy::from_linear(LinearPolicy(4.0));
  EXPECT_NEAR(policy_antiderivative(f, 0.3), -2.0 * 0.09, 1e-14);
  EXPECT_NEAR(policy_antiderivative(f, -0.3), -2.0 * 0.09, 1e-14);
}

// =============================================================================
// Growth statistics
// =============================================================================

TEST(Policies, GrowthStatsExamples) {
  WealthPath flat{std::vector<double>(11, 0.0), 0};
  EXPECT_DOUBLE_EQ(realized_growth_stats(flat, 1.0).mean_growth, 0.0);

  WealthPath w;
  w.values.assign(1251, 0.0);
  w.values.back() = 1.25;
  const auto g = realized_growth_stats(w, 1.0);
  EXPECT_DOUBLE_EQ(g.mean_growth, 1e-3);
  EXPECT_DOUBLE_EQ(g.terminal, 1.25);
}

TEST(Policies, AggregateIsPermutationInvariant) {
  std::vector<GrowthStats> stats;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(1e-3, 5e-4);
  for (int i = 0; i < 100; ++i) stats.push_back({n(gen), 0.0, 0.0});
  const auto a = aggregate_growth(stats);
  std::shuffle(stats.begin(), stats.end(), gen);
  const auto b = aggregate_growth(stats);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.variance, b.variance);
  EXPECT_EQ(a.n, 100u);
}

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/hermite.hpp>
#include <cmath>
#include <gtest/gtest.h>
#include <numbers>
#include <random>

#include "convlab/analytics.hpp"
#include "convlab/appendix_oracles.hpp"
#include "convlab/errors.hpp"
#include "convlab/parallel.hpp"
#include "convlab/quadrature.hpp"

using namespace convlab;
using std::numbers::pi;

namespace {

// He_k(x) = 2^{-k/2} H_k(x / sqrt 2), from Boost's physicists' polynomials.
double he_oracle(unsigned k, double x) {
  return std::pow(2.0, -0.5 * k) * boost::math::hermite(k, x / std::sqrt(2.0));
}

std::vector<double> random_unit_vector(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  std::vector<double> a(n);
  double norm = 0.0;
  for (auto& v : a) {
    v = z(gen);
    norm += v * v;
  }
  for (auto& v : a) v /= std::sqrt(norm);
  return a;
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
// Hermite basis
// =============================================================================

TEST(Hermite, LowOrderValues) {
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.1}) {
    EXPECT_DOUBLE_EQ(hermite_normalized(0, x), 1.0);
    EXPECT_DOUBLE_EQ(hermite_normalized(1, x), x);
    EXPECT_NEAR(hermite_normalized(2, x), (x * x - 1.0) / std::sqrt(2.0), 1e-14);
  }
}

TEST(Hermite, MatchesBoostPhysicists) {
  for (unsigned k = 0; k <= 12; ++k)
    for (double x : {-3.0, -1.1, 0.4, 2.5}) {
      const double ref = he_oracle(k, x) / std::sqrt(boost::math::factorial<double>(k));
      EXPECT_NEAR(hermite_normalized(k, x), ref, 1e-11 * std::max(1.0, std::abs(ref))) << k;
    }
}

TEST(Hermite, GaussHermiteRuleExactness) {
  const auto rule = gauss_hermite_rule(20);
  EXPECT_EQ(rule.exact_degree(), 39u);
  double w = 0.0;
  for (double v : rule.weights) w += v;
  EXPECT_NEAR(w, 1.0, 1e-14);
  // E[Z^{2m}] = (2m - 1)!!
  double dbl_fact = 1.0;
  for (unsigned m = 1; m <= 9; ++m) {
    dbl_fact *= 2.0 * m - 1.0;
    double moment = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) moment += rule.weights[i] * std::pow(rule.nodes[i], 2 * m);
    EXPECT_NEAR(moment / dbl_fact, 1.0, 1e-12) << m;
  }
  EXPECT_THROW(gauss_hermite_rule(0), DomainError);
}

TEST(Hermite, Orthonormality) {
  const auto rule = gauss_hermite_rule(64);
  for (unsigned i = 0; i <= 8; ++i)
    for (unsigned j = 0; j <= 8; ++j) {
      double m = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q)
        m += rule.weights[q] * hermite_normalized(i, rule.nodes[q]) * hermite_normalized(j, rule.nodes[q]);
      EXPECT_NEAR(m, i == j ? 1.0 : 0.0, 1e-10) << i << "," << j;
    }
}

TEST(Hermite, FactorialNormalizationIsNotOrthonormal) {
  const GaussianPair same(0.0);
  // E[H_2(Z)^2] with the 1/k! scaling is 2!/(2!)^2 = 1/2.
  const auto rule = gauss_hermite_rule(32);
  double m = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double h = hermite(2, rule.nodes[q], HermiteNormalization::factorial);
    m += rule.weights[q] * h * h;
  }
  EXPECT_NEAR(m, 0.5, 1e-12);
  EXPECT_NEAR(hermite_cross_moment(3, 3, GaussianPair(0.5), HermiteNormalization::factorial),
              0.125 / 6.0, 1e-12);
  (void)same;
}

TEST(Hermite, CrossMomentIdentity) {
  for (double beta : {0.1, 0.5, 0.9})
    for (unsigned i = 0; i <= 6; ++i)
      for (unsigned j = 0; j <= 6; ++j)
        EXPECT_NEAR(hermite_cross_moment(i, j, GaussianPair(beta)),
                    i == j ? std::pow(beta, i) : 0.0, 1e-8)
            << beta << " " << i << " " << j;
}

// =============================================================================
// Polynomial covariance bounds
// =============================================================================

TEST(PolynomialCov, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(polynomial_cov(PolynomialPolicy({1.0}), GaussianPair(0.5)), 0.5);
  EXPECT_NEAR(polynomial_cov(PolynomialPolicy({0.0, 0.0, 1.0}), GaussianPair(0.5)), 0.125, 1e-16);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(polynomial_cov(PolynomialPolicy({r, r}), GaussianPair(0.5)), 0.375, 1e-15);
  EXPECT_THROW(PolynomialPolicy({}), DomainError);
  EXPECT_THROW(GaussianPair(1.0), DomainError);
  EXPECT_THROW(GaussianPair(-0.1), DomainError);
}

TEST(PolynomialCov, BruteForceExamples) {
  EXPECT_NEAR(cov_bruteforce(PolynomialPolicy({1.0}), GaussianPair(0.7)), 0.7, 1e-10);
  EXPECT_NEAR(cov_bruteforce(PolynomialPolicy({0.0, 1.0}), GaussianPair(0.0)), 0.0, 1e-12);
  EXPECT_THROW(cov_bruteforce(PolynomialPolicy({0.0, 0.0, 0.0, 1.0}), GaussianPair(0.5), 3),
               DomainError);
}

TEST(PolynomialCov, BruteForceAgreesUpToDegreeEight) {
  std::mt19937_64 gen(99);
  for (std::size_t N = 1; N <= 8; ++N) {
    const PolynomialPolicy f(random_unit_vector(N, gen));
    for (double beta : {0.2, 0.6, 0.95})
      EXPECT_NEAR(cov_bruteforce(f, GaussianPair(beta)), polynomial_cov(f, GaussianPair(beta)), 1e-8);
  }
}

TEST(PolynomialCov, BoundsOverRandomPolynomials) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::size_t> deg(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = deg(gen);
    const PolynomialPolicy f(random_unit_vector(N, gen));
    for (double beta : {0.1, 0.3, 0.5, 0.9}) {
      const double c = polynomial_cov(f, GaussianPair(beta));
      EXPECT_GE(c, std::pow(beta, static_cast<double>(N)) - 1e-15);
      EXPECT_LE(c, beta + 1e-15);
    }
  }
  for (std::size_t N = 1; N <= 6; ++N) {
    std::vector<double> e1(N, 0.0), eN(N, 0.0);
    e1.front() = 1.0;
    eN.back() = 1.0;
    for (double beta : {0.1, 0.5, 0.9}) {
      EXPECT_DOUBLE_EQ(polynomial_cov(PolynomialPolicy(e1), GaussianPair(beta)), beta);
      EXPECT_DOUBLE_EQ(polynomial_cov(PolynomialPolicy(eN), GaussianPair(beta)),
                std::pow(beta, static_cast<double>(N)));
    }
  }
}

TEST(PolynomialCov, PositivityForDifferentiablePolicies) {
  const std::vector<std::function<double(double)>> fs{
      [](double x) { return -std::tanh(x); },
      [](double x) { return -std::clamp(x, -1.0, 1.0); },
      [](double x) { return -(x + 0.3 * x * x * x); },
  };
  for (const auto& f : fs)
    for (double beta : {0.05, 0.3, 0.7, 0.99}) {
      const double c = cov_bruteforce(f, GaussianPair(beta), 96);
      EXPECT_GE(c, 0.0);
    }
}

// =============================================================================
// Occupation density
// =============================================================================

TEST(Delta, MeanMatchesDensity) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  const auto at0 = delta_mean_mc(0.0, p, 0.01, PathGrid{0.01, 1000000, 5});
  EXPECT_LE(std::abs(at0.z_against(phi(0.0, 1.0))), 3.0) << at0.value << " +- " << at0.std_error;
  const auto at1 = delta_mean_mc(1.0, p, 0.01, PathGrid{0.01, 1000000, 5});
  EXPECT_NEAR(at1.value / at0.value, std::exp(-0.5), 0.05 * std::exp(-0.5));
}

TEST(Delta, WideBandIsBounded) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  const double band = 1e6;
  const auto est = delta_mean_mc(-1e3, p, band, PathGrid{0.1, 1000, 1});
  EXPECT_LE(est.value, (1.0 + 1e-12) / band);
  EXPECT_THROW(delta_mean_mc(0.0, p, 0.0, PathGrid{0.1, 10, 1}), DomainError);
}

TEST(Delta, SecondMomentLimits) {
  const auto p = OUParams::from_stationary(1.0, 2.0);
  const double f = phi(0.5, 2.0);
  EXPECT_NEAR(delta_second_moment(0.5, 60.0, p), f * f, 1e-15);
  const double a = std::exp(-0.3);
  EXPECT_NEAR(delta_second_moment(0.0, 0.3, p), 1.0 / (2.0 * pi * 2.0 * std::sqrt(1.0 - a * a)), 1e-14);
  EXPECT_THROW(delta_second_moment(0.0, 0.0, p), DomainError);
  EXPECT_THROW(theta(0.0, 0.0, p), DomainError);
}

TEST(Delta, SecondMomentAgainstBandMonteCarlo) {
  // Two-time band indicators one unit of time apart on a stationary path.
  const auto p = OUParams::from_stationary(1.0, 1.0);
  const double band = 0.05, dt = 0.05;
  const auto path = simulate_stationary(p, PathGrid{dt, 2000000, 8});
  const std::size_t lag = 20;
  std::vector<double> prod;
  prod.reserve(path.values.size());
  for (std::size_t k = 0; k + lag < path.values.size(); ++k) {
    const bool a = path.values[k] >= 0.0 && path.values[k] < band;
    const bool b = path.values[k + lag] >= 0.0 && path.values[k + lag] < band;
    prod.push_back(a && b ? 1.0 / (band * band) : 0.0);
  }
  const auto est = batch_means(prod);
  EXPECT_LE(std::abs(est.z_against(delta_second_moment(0.0, 1.0, p))), 3.0)
      << est.value << " +- " << est.std_error;
}

TEST(Delta, ThetaShape) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  for (double S : {0.0, 1.0, 2.0}) {
    const double f = phi(S, 1.0);
    EXPECT_LE(std::abs(theta(20.0, S, p)), 1e-6 * f * f);
  }
  EXPECT_GT(theta(1e-4, 0.0, p), theta(1e-2, 0.0, p));
  EXPECT_GT(theta(1e-2, 0.0, p), 0.0);
  // theta = second moment - phi^2
  EXPECT_NEAR(theta(0.4, 0.7, p), delta_second_moment(0.7, 0.4, p) - phi(0.7, 1.0) * phi(0.7, 1.0), 1e-14);
}

TEST(Delta, ThetaIntegralClosedFormAtZero) {
  // Direct change of variable: 2 int theta(tau, 0) dtau = ln 2 / (pi alpha Sigma).
  for (double alpha : {0.001, 0.01, 0.5, 1.0, 3.0})
    for (double Sigma : {5e-4, 0.2, 1.0, 4.0}) {
      const auto p = OUParams::from_stationary(alpha, Sigma);
      EXPECT_NEAR(2.0 * theta_integral(0.0, p).value / (std::numbers::ln2 / (pi * alpha * Sigma)), 1.0,
                  1e-9);
    }
}

TEST(Delta, ThetaIntegralAgainstTanhSinh) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double S : {1.0, 2.0}) {
    // tau = -ln(xi): the integrand becomes theta(-ln xi)/xi on (0, 1).
    auto g = [&](double xi) { return xi <= 0.0 ? 0.0 : theta(-std::log(xi), S, p) / xi; };
    const double ref = ts.integrate(g, 0.0, 1.0);
    EXPECT_NEAR(theta_integral(S, p).value / ref, 1.0, 1e-8) << S;
  }
}

TEST(Delta, ThetaIntegralRelatesToPsiByDensityScale) {
  // The chain closes up to the factor sqrt(2 pi Sigma) carried inside psi.
  for (double Sigma : {0.25, 1.0, 3.0}) {
    const auto p = OUParams::from_stationary(1.0, Sigma);
    for (double r : {0.0, 1.0, 2.0}) {
      const double S = r * std::sqrt(Sigma);
      const double f = phi(S, Sigma);
      const double lhs = 2.0 * theta_integral(S, p).value;
      const double rhs = f * f * psi(S, 1.0, Sigma) * std::sqrt(2.0 * pi * Sigma);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-8) << Sigma << " " << r;
    }
  }
}

TEST(Delta, IntegralVarianceIsThreadInvariant) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  DeltaIntegralSettings s;
  s.horizon = 20.0;
  s.dt = 0.01;
  s.n_realizations = 60;
  set_max_threads(1);
  const auto a = delta_integral_variance_mc(0.0, p, s);
  set_max_threads(4);
  const auto b = delta_integral_variance_mc(0.0, p, s);
  set_max_threads(0);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_GT(a.value, 0.0);
}

// =============================================================================
// Variance growth
// =============================================================================

TEST(VarianceGrowth, ConstantPolicyHasNoGrowth) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  const DifferentiablePolicy c([](double) { return 0.5; }, [](double) { return 0.0; }, 1.0);
  VarianceGrowthSettings s;
  s.horizon = 50.0;
  s.n_realizations = 40;
  const auto est = variance_growth_rate_mc(c, p, s);
  // u_t = 0.5 (x_t - x_0) is stationary; with f' = 0 there is no drift term.
  EXPECT_LE(std::abs(est.slope_z), 4.0);
  EXPECT_LE(std::abs(est.mean_growth.value), 4.0 * est.mean_growth.std_error + 1e-12);
  EXPECT_EQ(derivative_variance(c, 1.0), 0.0);
}

TEST(VarianceGrowth, LinearSlopeIsZero) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  VarianceGrowthSettings s;
  s.horizon = 200.0;
  s.n_realizations = 100;
  const auto est = variance_growth_rate_mc(DifferentiablePolicy::from_linear(LinearPolicy(5.0)), p, s);
  EXPECT_LE(std::abs(est.slope_z), 3.0) << est.slope << " +- " << est.slope_stderr;
  // Growth sigma^2 k / 2 = 5.
  EXPECT_LE(std::abs(est.mean_growth.z_against(5.0)), 3.0);
}

TEST(VarianceGrowth, TanhVarianceGrows) {
  const auto p = OUParams::from_stationary(1.0, 1.0);
  VarianceGrowthSettings s;
  s.horizon = 300.0;
  s.n_realizations = 200;
  const auto est = variance_growth_rate_mc(tanh_policy(), p, s);
  EXPECT_GT(est.slope_z, 3.0);
  EXPECT_GT(est.r + 3.0 * est.r_stderr, derivative_variance(tanh_policy(), 1.0));
}

TEST(VarianceGrowth, DerivativeVarianceOracle) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double Sigma = 1.0;
  auto dens = [&](double x) { return std::exp(-x * x / (2 * Sigma)) / std::sqrt(2 * pi * Sigma); };
  auto sech2 = [](double x) { const double c = std::cosh(x); return 1.0 / (c * c); };
  const double m1 = ts.integrate([&](double x) { return sech2(x) * dens(x); }, -40.0, 40.0);
  const double m2 = ts.integrate([&](double x) { return sech2(x) * sech2(x) * dens(x); }, -40.0, 40.0);
  EXPECT_NEAR(derivative_variance(tanh_policy(), Sigma), m2 - m1 * m1, 1e-12);
}

TEST(VarianceGrowth, RejectsTooFewRealizations) {
  VarianceGrowthSettings s;
  s.n_realizations = 10;
  EXPECT_THROW(variance_growth_rate_mc(tanh_policy(), OUParams(1.0, 1.0), s), DomainError);
}

// Statistics, quadrature, RNG streams and the parallel loop.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <gtest/gtest.h>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "convlab/errors.hpp"
#include "convlab/parallel.hpp"
#include "convlab/quadrature.hpp"
#include "convlab/rng.hpp"
#include "convlab/stats.hpp"

using namespace convlab;

TEST(Stats, OrderFreeSumIsPermutationInvariant) {
  std::mt19937_64 gen(1);
  std::lognormal_distribution<double> d(0.0, 4.0);
  std::vector<double> v(5000);
  for (auto& x : v) x = (gen() % 2 ? 1.0 : -1.0) * d(gen);
  const double a = order_free_sum(v);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(v.begin(), v.end(), gen);
    EXPECT_EQ(order_free_sum(v), a);
  }
}

TEST(Stats, MeanAndVariance) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(mean(v), 2.5);
  EXPECT_NEAR(sample_variance(v), 5.0 / 3.0, 1e-15);
  EXPECT_THROW(sample_variance(std::vector<double>{1.0}), DomainError);
  EXPECT_THROW(mean(std::vector<double>{}), DomainError);
}

TEST(Stats, BatchMeansOnIidData) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> z(3.0, 2.0);
  std::vector<double> v(200000);
  for (auto& x : v) x = z(gen);
  const auto est = batch_means(v);
  // With 20 batches the error bar itself scatters by about 1/sqrt(38) = 16%.
  const double ratio = est.std_error / (2.0 / std::sqrt(2e5));
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 1.6);
  EXPECT_TRUE(est.within(3.0, 4.0));
}

TEST(Stats, BatchMeansWidensForCorrelatedData) {
  // AR(1) with rho = 0.9: the iid error bar understates by sqrt((1+rho)/(1-rho)) ~ 4.4.
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  std::vector<double> v(400000);
  double x = 0.0;
  for (auto& s : v) s = x = 0.9 * x + z(gen);
  const auto est = batch_means(v);
  const double iid = std::sqrt(sample_variance(v) / v.size());
  EXPECT_GT(est.std_error / iid, 3.0);
  EXPECT_LT(est.std_error / iid, 6.5);
}

TEST(Stats, BatchVarianceOnIidData) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z(0.0, 3.0);
  std::vector<double> v(20000);
  for (auto& x : v) x = z(gen);
  const auto est = batch_variance(v);
  // Var of the sample variance: 2 sigma^4 / n.
  const double se = std::sqrt(2.0 * 81.0 / v.size());
  EXPECT_NEAR(est.std_error / se, 1.0, 0.4);
  EXPECT_LE(std::abs(est.z_against(9.0)), 4.0);
}

TEST(Stats, OlsSlopeAndAutocovariance) {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
  EXPECT_NEAR(ols_slope(x, y), 2.0, 1e-15);
  EXPECT_THROW(ols_slope(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0}), DomainError);
  const std::vector<double> a{1.0, -1.0, 1.0, -1.0};
  EXPECT_NEAR(sample_autocovariance(a, 0), 1.0, 1e-15);
  EXPECT_NEAR(sample_autocovariance(a, 1), -0.75, 1e-15);
}

TEST(Quadrature, SmoothAndInfinite) {
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value, 2.0, 1e-13);
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x * x); }, 0.0,
                        std::numeric_limits<double>::infinity())
                  .value,
              std::sqrt(std::numbers::pi) / 2.0, 1e-13);
  EXPECT_NEAR(integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-8).value, 2.0 / 3.0, 1e-8);
  // Tiny intervals converge without exhausting the refinement depth.
  EXPECT_NEAR(integrate([](double x) { return -2.0 * x; }, 0.0, 1e-8).value, -1e-16, 1e-28);
  EXPECT_NEAR(integrate([](double x) { return x; }, 1.0, 0.0).value, -0.5, 1e-15);
}

TEST(Quadrature, NonFiniteIsNumericalError) {
  EXPECT_THROW(integrate([](double) { return std::numeric_limits<double>::quiet_NaN(); }, 0.0, 1.0),
               NumericalError);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  StreamRng a(5, 0), b(5, 0), c(5, 1), d(6, 0);
  const double va = a.normal();
  EXPECT_EQ(va, b.normal());
  EXPECT_NE(va, c.normal());
  EXPECT_NE(va, d.normal());
  StreamRng hi(5ull << 32, 0);
  EXPECT_NE(StreamRng(5, 0).normal(), hi.normal());
}

TEST(Parallel, CoversEveryIndexOnce) {
  for (unsigned threads : {1u, 2u, 8u}) {
    set_max_threads(threads);
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  set_max_threads(0);
}

TEST(Parallel, PropagatesExceptions) {
  set_max_threads(4);
  EXPECT_THROW(parallel_for(100,
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  set_max_threads(0);
}

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace convlab {

/// A Monte-Carlo estimate with its standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;

  double z_against(double target) const { return (value - target) / std_error; }
  bool within(double target, double n_se) const;
};

/// Sum that does not depend on element order (values are sorted first).
double order_free_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Sample variance with n - 1 denominator. Requires n >= 2.
double sample_variance(std::span<const double> values);

/// Default batch count for serially dependent estimators.
inline constexpr std::size_t kDefaultBatches = 20;

/// Batch-means estimate of the mean of a (possibly autocorrelated) sequence.
/// Trailing samples that do not fill a batch are dropped from the error bar
/// but kept in the point estimate.
McEstimate batch_means(std::span<const double> samples, std::size_t n_batches = kDefaultBatches);

/// Batch-means estimate of the variance of iid replicate values.
/// Point estimate is the pooled sample variance; the error bar comes from the
/// spread of per-batch sample variances.
McEstimate batch_variance(std::span<const double> samples, std::size_t n_batches = kDefaultBatches);

/// Ordinary least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// Lag-k sample autocovariance (divisor n, mean removed).
double sample_autocovariance(std::span<const double> values, std::size_t lag);

}  // namespace convlab

#include "convlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "convlab/errors.hpp"

namespace convlab {

bool McEstimate::within(double target, double n_se) const {
  return std::abs(value - target) <= n_se * std_error;
}

double order_free_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  return total;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of an empty sample");
  return order_free_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("sample variance needs at least two values");
  const double m = mean(values);
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(),
                 [m](double v) { return (v - m) * (v - m); });
  return order_free_sum(sq) / static_cast<double>(values.size() - 1);
}

McEstimate batch_means(std::span<const double> samples, std::size_t n_batches) {
  if (n_batches < 2 || samples.size() < n_batches)
    throw DomainError("batch means needs at least as many samples as batches");
  const std::size_t per = samples.size() / n_batches;
  std::vector<double> batch(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) batch[b] = mean(samples.subspan(b * per, per));
  return {mean(samples), std::sqrt(sample_variance(batch) / static_cast<double>(n_batches))};
}

McEstimate batch_variance(std::span<const double> samples, std::size_t n_batches) {
  if (n_batches < 2 || samples.size() < 2 * n_batches)
    throw DomainError("batch variance needs at least two samples per batch");
  const std::size_t per = samples.size() / n_batches;
  std::vector<double> batch(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b)
    batch[b] = sample_variance(samples.subspan(b * per, per));
  return {sample_variance(samples),
          std::sqrt(sample_variance(batch) / static_cast<double>(n_batches))};
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("ols_slope needs matching samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DegenerateSeriesError("ols_slope: regressor has zero spread");
  return sxy / sxx;
}

double sample_autocovariance(std::span<const double> values, std::size_t lag) {
  if (values.size() <= lag) throw DomainError("autocovariance lag exceeds sample length");
  const double m = mean(values);
  double acc = 0.0;
  for (std::size_t i = lag; i < values.size(); ++i) acc += (values[i] - m) * (values[i - lag] - m);
  return acc / static_cast<double>(values.size());
}

}  // namespace convlab

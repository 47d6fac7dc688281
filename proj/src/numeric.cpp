#include "coverage/numeric.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "coverage/errors.hpp"

namespace coverage {

double compensated_sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  const std::int64_t m = std::min(k, n - k);
  if (m <= 64) {
    CompensatedSum acc;
    for (std::int64_t i = 0; i < m; ++i)
      acc.add(std::log(static_cast<double>(n - i)) -
              std::log(static_cast<double>(i + 1)));
    return acc.value();
  }
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error("normal_quantile: probability must lie in (0,1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double poisson_pmf(std::int64_t k, double mean) {
  if (k < 0) return 0.0;
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

}  // namespace coverage

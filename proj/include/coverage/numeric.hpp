#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace coverage {

/// Neumaier's variant of Kahan summation. Order-dependent by construction:
/// callers that promise reproducibility must feed terms in a fixed order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

/// log C(n, k). Uses a direct product for small min(k, n-k), lgamma otherwise.
double log_choose(std::int64_t n, std::int64_t k);

double normal_cdf(double x);

/// Standard-normal quantile. Backed by Boost.Math (inverse erfc from minimax
/// rational approximations, a few ulp of accuracy).
double normal_quantile(double p);

/// Poisson(mean) probability of k, evaluated in log space.
double poisson_pmf(std::int64_t k, double mean);

}  // namespace coverage

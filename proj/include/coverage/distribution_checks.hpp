#pragma once

// Goodness-of-fit diagnostics that turn replicate batches into verdicts.
// Thresholds applied to these statistics are desk-scale calibrations; the
// underlying theory only gives limits, not rates.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coverage/estimator.hpp"
#include "coverage/simulation.hpp"

namespace coverage {

struct GofReference {
  enum class Kind { standard_normal, poisson } kind = Kind::standard_normal;
  double mean = 0.0;  ///< Poisson only
  std::string describe() const;
};

struct GofResult {
  double statistic = 0.0;
  std::int64_t sample_size = 0;
  GofReference reference;
  /// Asymptotic Kolmogorov p-value (KS only; no small-sample correction).
  std::optional<double> p_value;
};

/// sup_x |F_m(x) - Phi(x)| from the sorted two-sided formula.
GofResult ks_normal(std::span<const double> samples);

/// P(K > lambda) for the Kolmogorov distribution, alternating series.
double kolmogorov_survival(double lambda);

/// Total-variation distance between the empirical pmf and Poisson(mean),
/// the Poisson pmf truncated past its mode once it drops below 1e-12.
GofResult poisson_gof(std::span<const std::int64_t> samples, double mean);

/// (Phi^{-1}((i - 1/2)/m), x_(i)) in ascending order.
std::vector<std::pair<double, double>> qq_points(std::span<const double> samples);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct CoverageRate {
  double coverage = 0.0;
  std::int64_t evaluated = 0;
  std::int64_t degenerate_count = 0;
};

/// Fraction of intervals containing the matching truth value.
CoverageRate coverage_rate(std::span<const Interval> intervals,
                           std::span<const double> truth);

/// Coverage of the Wald interval built from each replicate's own (F1, F2);
/// degenerate replicates are counted but not evaluated.
CoverageRate ci_coverage_rate(const ReplicateBatch& batch, double level,
                              VarianceMode mode = VarianceMode::esty);

/// Fraction of replicates with |q_hat / q_true - 1| > epsilon. A replicate
/// with q_true = 0 counts as exceeding unless q_hat = 0 as well.
double relative_error_exceedance(const ReplicateBatch& batch, double epsilon);

enum class ZKind { empirical, expected };

/// Non-degenerate z values of the requested kind, in replicate order. Throws
/// when more than 10% of the replicates are degenerate.
std::vector<double> z_values(const ReplicateBatch& batch, ZKind kind);

std::vector<std::int64_t> f1_values(const ReplicateBatch& batch);

struct ChiSquareResult {
  double statistic = 0.0;
  std::int64_t dof = 0;
  double p_value = 1.0;
};

/// Two-sample chi-square homogeneity test on integer-valued samples. Values
/// are pooled into consecutive bins until every expected cell count is at
/// least `min_expected`.
ChiSquareResult chi_square_homogeneity(std::span<const std::int64_t> a,
                                       std::span<const std::int64_t> b,
                                       double min_expected = 5.0);

}  // namespace coverage

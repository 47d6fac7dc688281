#pragma once

// Good-Turing coverage estimation from frequency-of-frequencies data.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace coverage {

/// How a profile treats a declared sample size that disagrees with sum j*F_j.
enum class ProfileMode { strict, declared };

/// Variance used for the Wald interval. `esty` is F1(1 - F1/n) + 2 F2;
/// `f1_only` drops the 2 F2 term.
enum class VarianceMode { esty, f1_only };

const char* to_string(ProfileMode mode);
const char* to_string(VarianceMode mode);
VarianceMode parse_variance_mode(const std::string& text);

/// Frequency-of-frequencies table: counts()[j] = F_j, the number of species
/// seen exactly j times, together with the sample size n.
class FrequencyProfile {
 public:
  using Counts = std::map<std::int64_t, std::int64_t>;

  /// Throws Error on negative F_j, j < 1, n < 1, F_j > n, or (strict mode) a
  /// declared n that differs from sum j*F_j. Declared mode records a warning
  /// instead. Zero entries are dropped.
  FrequencyProfile(Counts counts, std::int64_t declared_n,
                   ProfileMode mode = ProfileMode::strict);

  const Counts& counts() const { return counts_; }
  std::int64_t n() const { return n_; }
  ProfileMode mode() const { return mode_; }

  /// F_j, zero when absent.
  std::int64_t frequency(std::int64_t j) const;
  /// sum_j j * F_j
  std::int64_t observed_total() const { return observed_total_; }
  std::int64_t species_observed() const;
  bool total_mismatch() const { return observed_total_ != n_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  friend bool operator==(const FrequencyProfile& a, const FrequencyProfile& b) {
    return a.counts_ == b.counts_ && a.n_ == b.n_;
  }

 private:
  Counts counts_;
  std::int64_t n_;
  ProfileMode mode_;
  std::int64_t observed_total_ = 0;
  std::vector<std::string> warnings_;
};

/// Tabulate per-species counts into a strict profile; zeros are ignored.
/// Throws Error("no observations") when every entry is zero.
FrequencyProfile profile_from_counts(std::span<const std::int64_t> species_counts);

/// Turing's formula F1 / n.
double coverage_estimate(const FrequencyProfile& profile);

double variance_hat(const FrequencyProfile& profile, VarianceMode mode);

/// Same as variance_hat, straight from (F1, F2, n). Integer products are
/// formed exactly; the only rounding happens at the final conversions.
double variance_from_counts(std::int64_t f1, std::int64_t f2, std::int64_t n,
                            VarianceMode mode = VarianceMode::esty);

/// n (q_hat - q_true) / sqrt(denom_sq). Throws Error("degenerate
/// denominator") when denom_sq is not positive.
double z_statistic(double q_hat, double q_true, std::int64_t n, double denom_sq);

struct CoverageEstimate {
  double q_hat = 0.0;
  double variance_hat = 0.0;  ///< counts^2, i.e. the squared Z denominator
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  VarianceMode mode = VarianceMode::esty;
  bool degenerate = false;  ///< zero variance: point interval at q_hat
  std::vector<std::string> warnings;
};

/// Wald interval q_hat +/- z_{(1+level)/2} sqrt(variance_hat) / n, clamped
/// to [0,1]. Zero variance yields [q_hat, q_hat] with `degenerate` set.
CoverageEstimate confidence_interval(const FrequencyProfile& profile, double level,
                                     VarianceMode mode = VarianceMode::esty);

/// Interval from raw (F1, F2, n); used by replicate batches.
CoverageEstimate confidence_interval(std::int64_t f1, std::int64_t f2, std::int64_t n,
                                     double level, VarianceMode mode);

}  // namespace coverage

#include "coverage/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "coverage/errors.hpp"
#include "coverage/numeric.hpp"

namespace coverage {

const char* to_string(ProfileMode mode) {
  return mode == ProfileMode::strict ? "strict" : "declared";
}

const char* to_string(VarianceMode mode) {
  return mode == VarianceMode::esty ? "esty" : "f1-only";
}

VarianceMode parse_variance_mode(const std::string& text) {
  if (text == "esty") return VarianceMode::esty;
  if (text == "f1-only" || text == "f1_only") return VarianceMode::f1_only;
  throw ConfigError("unknown variance mode '" + text + "' (expected esty or f1-only)");
}

FrequencyProfile::FrequencyProfile(Counts counts, std::int64_t declared_n,
                                   ProfileMode mode)
    : n_(declared_n), mode_(mode) {
  if (declared_n < 1) throw Error("sample size must be positive");
  for (const auto& [j, fj] : counts) {
    if (j < 1) throw Error("occupancy level j must be >= 1, got " + std::to_string(j));
    if (fj < 0)
      throw Error("F_" + std::to_string(j) + " is negative (" + std::to_string(fj) + ")");
    if (fj > declared_n)
      throw Error("F_" + std::to_string(j) + " = " + std::to_string(fj) +
                  " exceeds n = " + std::to_string(declared_n));
    if (fj == 0) continue;
    counts_.emplace(j, fj);
    observed_total_ += j * fj;
  }
  if (observed_total_ != n_) {
    const std::string msg = "sum of j*F_j is " + std::to_string(observed_total_) +
                            " but declared n is " + std::to_string(n_);
    if (mode_ == ProfileMode::strict) throw Error(msg);
    warnings_.push_back(msg);
  }
}

std::int64_t FrequencyProfile::frequency(std::int64_t j) const {
  const auto it = counts_.find(j);
  return it == counts_.end() ? 0 : it->second;
}

std::int64_t FrequencyProfile::species_observed() const {
  std::int64_t s = 0;
  for (const auto& [j, fj] : counts_) s += fj;
  return s;
}

FrequencyProfile profile_from_counts(std::span<const std::int64_t> species_counts) {
  FrequencyProfile::Counts table;
  std::int64_t n = 0;
  for (std::int64_t c : species_counts) {
    if (c < 0) throw Error("negative species count " + std::to_string(c));
    if (c == 0) continue;
    ++table[c];
    n += c;
  }
  if (n == 0) throw Error("no observations");
  return FrequencyProfile(std::move(table), n, ProfileMode::strict);
}

double coverage_estimate(const FrequencyProfile& profile) {
  return static_cast<double>(profile.frequency(1)) / static_cast<double>(profile.n());
}

double variance_from_counts(std::int64_t f1, std::int64_t f2, std::int64_t n,
                            VarianceMode mode) {
  if (n < 1) throw Error("sample size must be positive");
  // F1 (1 - F1/n) = F1 (n - F1) / n; the product is exact in the 64-bit
  // long double mantissa for n < 2^33.
  const long double num = static_cast<long double>(f1) * static_cast<long double>(n - f1);
  double v = static_cast<double>(num / static_cast<long double>(n));
  if (mode == VarianceMode::esty) v += static_cast<double>(2 * f2);
  return std::max(v, 0.0);
}

double variance_hat(const FrequencyProfile& profile, VarianceMode mode) {
  return variance_from_counts(profile.frequency(1), profile.frequency(2), profile.n(),
                              mode);
}

double z_statistic(double q_hat, double q_true, std::int64_t n, double denom_sq) {
  if (!(denom_sq > 0.0)) throw Error("degenerate denominator");
  return static_cast<double>(n) * (q_hat - q_true) / std::sqrt(denom_sq);
}

CoverageEstimate confidence_interval(std::int64_t f1, std::int64_t f2, std::int64_t n,
                                     double level, VarianceMode mode) {
  if (!(level > 0.0 && level < 1.0))
    throw Error("confidence level must lie in (0,1)");
  CoverageEstimate est;
  est.level = level;
  est.mode = mode;
  est.q_hat = static_cast<double>(f1) / static_cast<double>(n);
  est.variance_hat = variance_from_counts(f1, f2, n, mode);
  if (est.variance_hat == 0.0) {
    est.degenerate = true;
    est.ci_low = est.ci_high = est.q_hat;
    est.warnings.push_back("zero variance estimate; interval collapsed to the point estimate");
    return est;
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(est.variance_hat) / static_cast<double>(n);
  est.ci_low = std::clamp(est.q_hat - half, 0.0, 1.0);
  est.ci_high = std::clamp(est.q_hat + half, 0.0, 1.0);
  return est;
}

CoverageEstimate confidence_interval(const FrequencyProfile& profile, double level,
                                     VarianceMode mode) {
  auto est = confidence_interval(profile.frequency(1), profile.frequency(2), profile.n(),
                                 level, mode);
  est.warnings.insert(est.warnings.begin(), profile.warnings().begin(),
                      profile.warnings().end());
  return est;
}

}  // namespace coverage

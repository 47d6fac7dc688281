#include "coverage/distribution_checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/special_functions/gamma.hpp>

#include "coverage/errors.hpp"
#include "coverage/numeric.hpp"

namespace coverage {

std::string GofReference::describe() const {
  if (kind == Kind::standard_normal) return "standard-normal";
  char buf[64];
  std::snprintf(buf, sizeof buf, "poisson{mean=%.17g}", mean);
  return buf;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // The alternating series is useless this close to zero, where the CDF is
  // below 1e-15 anyway.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

GofResult ks_normal(std::span<const double> samples) {
  if (samples.size() < 2) throw Error("ks_normal: need at least 2 samples");
  std::vector<double> x(samples.begin(), samples.end());
  for (double v : x)
    if (!std::isfinite(v)) throw Error("ks_normal: non-finite sample");
  std::sort(x.begin(), x.end());
  const double m = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  GofResult r;
  r.statistic = d;
  r.sample_size = static_cast<std::int64_t>(x.size());
  r.p_value = kolmogorov_survival(std::sqrt(m) * d);
  return r;
}

GofResult poisson_gof(std::span<const std::int64_t> samples, double mean) {
  if (samples.size() < 100) throw Error("poisson_gof: need at least 100 samples");
  if (!(mean > 0.0) || !std::isfinite(mean)) throw Error("poisson_gof: mean must be positive");
  std::map<std::int64_t, std::int64_t> hist;
  for (auto v : samples) {
    if (v < 0) throw Error("poisson_gof: negative sample");
    ++hist[v];
  }
  const double m = static_cast<double>(samples.size());
  CompensatedSum tv;
  std::int64_t k = 0;
  for (;; ++k) {
    const double pk = poisson_pmf(k, mean);
    if (static_cast<double>(k) > mean && pk < 1e-12) break;
    const auto it = hist.find(k);
    const double ek = it == hist.end() ? 0.0 : static_cast<double>(it->second) / m;
    tv.add(std::abs(ek - pk));
  }
  for (auto it = hist.lower_bound(k); it != hist.end(); ++it)
    tv.add(static_cast<double>(it->second) / m);
  GofResult r;
  r.statistic = std::clamp(0.5 * tv.value(), 0.0, 1.0);
  r.sample_size = static_cast<std::int64_t>(samples.size());
  r.reference = {GofReference::Kind::poisson, mean};
  return r;
}

std::vector<std::pair<double, double>> qq_points(std::span<const double> samples) {
  if (samples.empty()) throw Error("qq_points: no samples");
  std::vector<double> x(samples.begin(), samples.end());
  for (double v : x)
    if (!std::isfinite(v)) throw Error("qq_points: non-finite sample");
  std::sort(x.begin(), x.end());
  const double m = static_cast<double>(x.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / m), x[i]);
  return out;
}

CoverageRate coverage_rate(std::span<const Interval> intervals,
                           std::span<const double> truth) {
  if (intervals.size() != truth.size())
    throw Error("coverage_rate: interval and truth counts differ");
  if (intervals.empty()) throw Error("coverage_rate: nothing to evaluate");
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i)
    if (intervals[i].low <= truth[i] && truth[i] <= intervals[i].high) ++hits;
  CoverageRate r;
  r.evaluated = static_cast<std::int64_t>(intervals.size());
  r.coverage = static_cast<double>(hits) / static_cast<double>(r.evaluated);
  return r;
}

CoverageRate ci_coverage_rate(const ReplicateBatch& batch, double level, VarianceMode mode) {
  if (batch.records.empty()) throw Error("ci_coverage_rate: batch lacks replicates");
  std::vector<Interval> intervals;
  std::vector<double> truth;
  std::int64_t degenerate = 0;
  for (const auto& r : batch.records) {
    if (!std::isfinite(r.q_true)) throw Error("ci_coverage_rate: batch lacks q_true");
    const auto est = confidence_interval(r.f1, r.f2, batch.config.n, level, mode);
    if (est.degenerate) {
      ++degenerate;
      continue;
    }
    intervals.push_back({est.ci_low, est.ci_high});
    truth.push_back(r.q_true);
  }
  CoverageRate out;
  if (!intervals.empty()) out = coverage_rate(intervals, truth);
  out.degenerate_count = degenerate;
  return out;
}

double relative_error_exceedance(const ReplicateBatch& batch, double epsilon) {
  if (batch.records.empty()) throw Error("relative_error_exceedance: empty batch");
  if (!(epsilon > 0.0)) throw Error("relative_error_exceedance: epsilon must be positive");
  std::int64_t exceed = 0;
  for (const auto& r : batch.records) {
    if (r.q_true == 0.0) {
      exceed += r.q_hat != 0.0 ? 1 : 0;
      continue;
    }
    if (std::abs(r.q_hat / r.q_true - 1.0) > epsilon) ++exceed;
  }
  return static_cast<double>(exceed) / static_cast<double>(batch.records.size());
}

std::vector<double> z_values(const ReplicateBatch& batch, ZKind kind) {
  const auto total = static_cast<double>(batch.records.size());
  std::vector<double> out;
  std::int64_t missing = 0;
  for (const auto& r : batch.records) {
    const auto& z = kind == ZKind::empirical ? r.z_empirical : r.z_expected;
    if (z)
      out.push_back(*z);
    else
      ++missing;
  }
  if (static_cast<double>(missing) > 0.1 * total)
    throw Error(std::to_string(missing) + " of " + std::to_string(batch.records.size()) +
                " replicates have a degenerate denominator (more than 10%)");
  return out;
}

std::vector<std::int64_t> f1_values(const ReplicateBatch& batch) {
  std::vector<std::int64_t> out;
  out.reserve(batch.records.size());
  for (const auto& r : batch.records) out.push_back(r.f1);
  return out;
}

ChiSquareResult chi_square_homogeneity(std::span<const std::int64_t> a,
                                       std::span<const std::int64_t> b,
                                       double min_expected) {
  if (a.empty() || b.empty()) throw Error("chi_square_homogeneity: empty sample");
  std::map<std::int64_t, std::pair<double, double>> cells;
  for (auto v : a) cells[v].first += 1.0;
  for (auto v : b) cells[v].second += 1.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double share = std::min(na, nb) / (na + nb);

  // Consecutive pooling; a short final bin is folded into its predecessor.
  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> open{0.0, 0.0};
  for (const auto& [value, c] : cells) {
    open.first += c.first;
    open.second += c.second;
    if ((open.first + open.second) * share >= min_expected) {
      bins.push_back(open);
      open = {0.0, 0.0};
    }
  }
  if (open.first + open.second > 0.0) {
    if (bins.empty())
      bins.push_back(open);
    else {
      bins.back().first += open.first;
      bins.back().second += open.second;
    }
  }
  ChiSquareResult r;
  r.dof = static_cast<std::int64_t>(bins.size()) - 1;
  if (r.dof < 1) return r;
  for (const auto& [oa, ob] : bins) {
    const double pooled = oa + ob;
    const double ea = pooled * na / (na + nb);
    const double eb = pooled * nb / (na + nb);
    r.statistic += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
  }
  r.p_value = boost::math::gamma_q(0.5 * static_cast<double>(r.dof), 0.5 * r.statistic);
  return r;
}

}  // namespace coverage

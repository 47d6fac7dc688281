#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "coverage/errors.hpp"
#include "coverage/random.hpp"

using namespace coverage;

namespace {

double log_pmf_poisson(std::int64_t k, double mean) {
  return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

double log_pmf_binomial(std::int64_t k, std::int64_t n, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

// Pearson statistic over consecutive cells of `width` values in [lo, hi];
// cells with expected count < 5 are pooled into one remainder cell.
// Returns {statistic, degrees of freedom}.
template <class LogPmf>
std::pair<double, int> pearson(const std::map<std::int64_t, std::int64_t>& observed,
                               std::int64_t draws, std::int64_t lo, std::int64_t hi,
                               LogPmf log_pmf, std::int64_t width = 1) {
  double stat = 0.0, rest_expected = draws, rest_observed = draws;
  int cells = 0;
  for (std::int64_t start = lo; start <= hi; start += width) {
    const std::int64_t end = std::min(hi + 1, start + width);
    double expected = 0.0;
    for (std::int64_t k = start; k < end; ++k) expected += draws * std::exp(log_pmf(k));
    if (expected < 5.0) continue;
    double obs = 0.0;
    for (auto it = observed.lower_bound(start); it != observed.end() && it->first < end; ++it) {
      obs += static_cast<double>(it->second);
    }
    stat += (obs - expected) * (obs - expected) / expected;
    rest_expected -= expected;
    rest_observed -= obs;
    ++cells;
  }
  if (rest_expected >= 5.0) {
    stat += (rest_observed - rest_expected) * (rest_observed - rest_expected) / rest_expected;
    ++cells;
  }
  return {stat, cells - 1};
}

// Generous acceptance band for a chi-square with `dof` degrees of freedom:
// mean + 5 standard deviations. Seeds are fixed, so this is deterministic.
double chi_square_band(int dof) { return dof + 5.0 * std::sqrt(2.0 * dof); }

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<std::int64_t>& xs) {
  long double s = 0.0L, s2 = 0.0L;
  for (auto x : xs) {
    s += x;
    s2 += static_cast<long double>(x) * x;
  }
  const long double m = s / xs.size();
  return {static_cast<double>(m), static_cast<double>(s2 / xs.size() - m * m)};
}

}  // namespace

TEST(Engine, StandardMt19937_64Sequence) {
  // The C++ standard fixes the 10000th output of a default-seeded engine.
  Rng rng;
  rng.discard(9999);
  EXPECT_EQ(rng(), 9981545732273789042ULL);
}

TEST(Splitmix, ReferenceValueAndSubstreams) {
  // First output of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(substream_seed(42, 7), substream_seed(42, 7));
  EXPECT_NE(substream_seed(42, 7), substream_seed(42, 8));
  EXPECT_NE(substream_seed(42, 7), substream_seed(43, 7));
  EXPECT_EQ(substream_seed(5, 0),
            splitmix64(splitmix64(5) ^ splitmix64(1)));
}

TEST(Uniform, StrictlyInsideUnitInterval) {
  Rng rng(1);
  double lo = 1.0, hi = 0.0, total = 0.0;
  for (int i = 0; i < 200'000; ++i) {
    const double u = uniform_open(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    total += u;
  }
  EXPECT_NEAR(total / 200'000, 0.5, 0.005);
  EXPECT_LT(lo, 1e-4);
  EXPECT_GT(hi, 1 - 1e-4);
}

class PoissonVariate : public ::testing::TestWithParam<double> {};

TEST_P(PoissonVariate, MomentsAndChiSquare) {
  const double mean = GetParam();
  Rng rng(2024);
  const std::int64_t draws = 200'000;
  std::vector<std::int64_t> xs(draws);
  std::map<std::int64_t, std::int64_t> hist;
  for (auto& x : xs) {
    x = poisson_variate(rng, mean);
    ASSERT_GE(x, 0);
    ++hist[x];
  }
  const auto m = moments(xs);
  const double se = std::sqrt(mean / draws);
  EXPECT_NEAR(m.mean, mean, 5 * se);
  EXPECT_NEAR(m.var / mean, 1.0, 0.03);

  const auto hi = static_cast<std::int64_t>(mean + 10 * std::sqrt(mean) + 20);
  const auto [stat, dof] =
      pearson(hist, draws, 0, hi, [&](std::int64_t k) { return log_pmf_poisson(k, mean); });
  ASSERT_GE(dof, 1);
  EXPECT_LT(stat, chi_square_band(dof)) << "dof=" << dof;
}

// Both the inversion (< 10) and the rejection (>= 10) branches.
INSTANTIATE_TEST_SUITE_P(Regimes, PoissonVariate,
                         ::testing::Values(0.05, 0.9, 4.0, 9.99, 10.0, 37.5, 1000.0, 2.5e5));

TEST(PoissonVariate, PrecomputedExpMatches) {
  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(poisson_variate(a, 3.3), poisson_variate(b, 3.3, std::exp(-3.3)));
  }
}

TEST(PoissonVariate, EdgeCases) {
  Rng rng(3);
  EXPECT_EQ(poisson_variate(rng, 0.0), 0);
  EXPECT_THROW(poisson_variate(rng, -1.0), Error);
  EXPECT_THROW(poisson_variate(rng, std::nan("")), Error);
}

struct BinomialCase {
  std::int64_t trials;
  double p;
};

class BinomialVariate : public ::testing::TestWithParam<BinomialCase> {};

TEST_P(BinomialVariate, MomentsAndChiSquare) {
  const auto [n, p] = GetParam();
  Rng rng(77);
  const std::int64_t draws = 200'000;
  std::vector<std::int64_t> xs(draws);
  std::map<std::int64_t, std::int64_t> hist;
  for (auto& x : xs) {
    x = binomial_variate(rng, n, p);
    ASSERT_GE(x, 0);
    ASSERT_LE(x, n);
    ++hist[x];
  }
  const double mean = n * p, var = n * p * (1 - p);
  const auto m = moments(xs);
  EXPECT_NEAR(m.mean, mean, 5 * std::sqrt(var / draws));
  EXPECT_NEAR(m.var / var, 1.0, 0.03);

  const double sd = std::sqrt(var);
  const auto lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(mean - 10 * sd - 20));
  const auto hi = std::min<std::int64_t>(n, static_cast<std::int64_t>(mean + 10 * sd + 20));
  const auto width = std::max<std::int64_t>(1, static_cast<std::int64_t>(sd / 20));
  const auto [stat, dof] = pearson(
      hist, draws, lo, hi, [&](std::int64_t k) { return log_pmf_binomial(k, n, p); }, width);
  ASSERT_GE(dof, 1);
  EXPECT_LT(stat, chi_square_band(dof)) << "dof=" << dof;
}

INSTANTIATE_TEST_SUITE_P(
    Regimes, BinomialVariate,
    ::testing::Values(BinomialCase{10, 0.3}, BinomialCase{1000, 0.002}, BinomialCase{19, 0.5},
                      BinomialCase{20, 0.5}, BinomialCase{100, 0.9}, BinomialCase{500, 0.37},
                      BinomialCase{1'000'000, 1e-4}, BinomialCase{3'000'000'000LL, 0.25}));

TEST(BinomialVariate, EdgeCases) {
  Rng rng(4);
  EXPECT_EQ(binomial_variate(rng, 0, 0.5), 0);
  EXPECT_EQ(binomial_variate(rng, 17, 0.0), 0);
  EXPECT_EQ(binomial_variate(rng, 17, 1.0), 17);
  EXPECT_THROW(binomial_variate(rng, -1, 0.5), Error);
  EXPECT_THROW(binomial_variate(rng, 5, 1.5), Error);
  EXPECT_THROW(binomial_variate(rng, 5, -0.1), Error);
}

TEST(Determinism, SameSeedSameStream) {
  Rng a(substream_seed(11, 3)), b(substream_seed(11, 3));
  for (int i = 0; i < 500; ++i) {
    ASSERT_EQ(binomial_variate(a, 1000, 0.3), binomial_variate(b, 1000, 0.3));
    ASSERT_EQ(poisson_variate(a, 12.5), poisson_variate(b, 12.5));
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "coverage/distribution_checks.hpp"
#include "coverage/errors.hpp"
#include "coverage/estimator.hpp"
#include "coverage/population.hpp"
#include "coverage/simulation.hpp"

using namespace coverage;

namespace {

struct Summary {
  double mean = 0.0;
  double var = 0.0;
  double se() const { return std::sqrt(var / count); }
  std::size_t count = 0;
};

template <class T>
Summary summarize(const std::vector<T>& xs) {
  long double s = 0.0L;
  for (auto x : xs) s += x;
  const long double m = s / xs.size();
  long double ss = 0.0L;
  for (auto x : xs) ss += (x - m) * (x - m);
  return {static_cast<double>(m), static_cast<double>(ss / (xs.size() - 1)), xs.size()};
}

std::int64_t total(const SampleOutcome& o) {
  return std::accumulate(o.counts.begin(), o.counts.end(), std::int64_t{0});
}

SampleOutcome synthetic(std::vector<std::int64_t> counts) {
  SampleOutcome o;
  o.total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  o.counts = std::move(counts);
  return o;
}

}  // namespace

TEST(Multinomial, SingleAtomTakesEverything) {
  const auto model = build_model(ExplicitFamily{{1.0}}, 7);
  Rng rng(1);
  const auto o = draw_multinomial(model, 7, rng);
  EXPECT_EQ(o.counts, std::vector<std::int64_t>{7});
  EXPECT_EQ(o.total, 7);
  EXPECT_THROW(draw_multinomial(model, 0, rng), Error);
}

TEST(Multinomial, UniformSingletonMeanMatchesExactSum) {
  const auto model = build_model(uniform_family(100), 500);
  const MultinomialSampler sampler(model);
  Rng rng(12345);
  std::vector<double> f1(10'000);
  for (auto& f : f1) {
    const auto o = sampler.draw(500, rng);
    ASSERT_EQ(total(o), 500);
    ASSERT_EQ(o.total, 500);
    f = static_cast<double>(count_frequency(o, 1));
  }
  const auto s = summarize(f1);
  EXPECT_NEAR(s.mean, expected_fj(model, 500, 1), 4 * s.se());
  EXPECT_EQ(sampler.underflow_warnings(), 0);
}

TEST(Multinomial, PerAtomMeansOnSkewedModel) {
  const auto model = build_model(ParetoFamily{1.0, 3.0}, 200, 1e-3);
  const MultinomialSampler sampler(model);
  Rng rng(8);
  const int reps = 20'000;
  std::vector<long double> sums(model.size(), 0.0L);
  for (int r = 0; r < reps; ++r) {
    const auto o = sampler.draw(200, rng);
    for (std::size_t i = 0; i < o.counts.size(); ++i) sums[i] += o.counts[i];
  }
  for (std::size_t i : {0u, 1u, 5u, 30u}) {
    const double p = model.probs()[i];
    const double se = std::sqrt(200 * p * (1 - p) / reps);
    EXPECT_NEAR(static_cast<double>(sums[i] / reps), 200 * p, 5 * se) << i;
  }
}

TEST(Poissonized, SingletonMeanMatchesFirstTerm) {
  const auto model = build_model(ParetoFamily{1.0, 3.0}, 2000);
  const double lambda = 2000.0;
  const PoissonSampler sampler(model, lambda);
  Rng rng(99);
  std::vector<double> f1(10'000);
  for (auto& f : f1) {
    const auto o = sampler.draw(rng);
    ASSERT_EQ(total(o), o.total);
    f = static_cast<double>(count_frequency(o, 1));
  }
  double oracle = 0.0;
  for (double p : model.probs()) oracle += lambda * p * std::exp(-lambda * p);
  const auto s = summarize(f1);
  EXPECT_NEAR(s.mean, oracle, 4 * s.se());
}

TEST(Poissonized, TinyIntensityObservesNothing) {
  const auto model = build_model(uniform_family(10), 10);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_poissonized(model, 1e-9, rng).total, 0);
}

TEST(Poissonized, ZetaIsCenteredWithVarianceSSquared) {
  const auto model = build_model(ParetoFamily{1.0, 3.0}, 5000);
  const double lambda = 5000.0;
  const PoissonSampler sampler(model, lambda);
  Rng rng(2718);
  std::vector<double> zeta(10'000);
  for (auto& z : zeta) z = zeta_statistic(model, lambda, sampler.draw(rng));
  const auto s = summarize(zeta);
  EXPECT_NEAR(s.mean, 0.0, 4 * s.se());
  EXPECT_NEAR(s.var / s_squared(model, lambda), 1.0, 0.05);
}

TEST(Coupled, IdenticalWhenPoissonTotalEqualsN) {
  const auto model = build_model(uniform_family(6), 5);
  const MultinomialSampler sampler(model);
  Rng rng(31);
  int hits = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto pair = coupled_pair(sampler, 5, rng);
    EXPECT_EQ(pair.multinomial.total, 5);
    EXPECT_EQ(total(pair.poissonized), pair.poissonized.total);
    // One member always dominates the other coordinatewise.
    const bool more = pair.poissonized.total >= 5;
    for (std::size_t k = 0; k < 6; ++k) {
      if (more) {
        EXPECT_GE(pair.poissonized.counts[k], pair.multinomial.counts[k]);
      } else {
        EXPECT_LE(pair.poissonized.counts[k], pair.multinomial.counts[k]);
      }
    }
    if (pair.poissonized.total == 5) {
      ++hits;
      EXPECT_EQ(pair.poissonized.counts, pair.multinomial.counts);
    }
  }
  EXPECT_GT(hits, 100);
}

TEST(Coupled, PoissonizedMarginalMatchesIndependentDraws) {
  const auto model = build_model(ParetoFamily{1.0, 3.0}, 3000);
  const MultinomialSampler sampler(model);
  const PoissonSampler direct(model, 3000.0);
  Rng a(41), b(42);
  std::vector<std::int64_t> coupled_f1, direct_f1;
  for (int i = 0; i < 10'000; ++i) {
    coupled_f1.push_back(count_frequency(coupled_pair(sampler, 3000, a).poissonized, 1));
    direct_f1.push_back(count_frequency(direct.draw(b), 1));
  }
  const auto chi = chi_square_homogeneity(coupled_f1, direct_f1);
  EXPECT_GT(chi.p_value, 0.01) << chi.statistic << " dof=" << chi.dof;
  const auto sc = summarize(coupled_f1), sd = summarize(direct_f1);
  EXPECT_NEAR(sc.mean, sd.mean, 4 * std::hypot(sc.se(), sd.se()));
}

TEST(Coupled, GapStatisticIsSmallInCltRegime) {
  ReplicateConfig config;
  config.family = ParetoFamily{1.0, 3.0};
  config.n = 1'000'000;
  config.replicates = 1000;
  config.seed = 20240601;
  config.coupled = true;
  const auto batch = run_replicates(config);
  double gap = 0.0;
  for (const auto& r : batch.records) {
    ASSERT_TRUE(r.zeta.has_value());
    ASSERT_TRUE(r.poisson_total.has_value());
    gap += std::abs(r.xi - *r.zeta) / batch.s_n;
  }
  EXPECT_LT(gap / batch.records.size(), 0.15);
}

TEST(Statistics, MissingMassEdgeCases) {
  const auto model = build_model(ExplicitFamily{{0.5, 0.3, 0.2}}, 3);
  EXPECT_EQ(true_missing_mass(model, synthetic({1, 4, 2})), 0.0);
  EXPECT_NEAR(true_missing_mass(model, synthetic({0, 0, 0})), 1.0, 1e-15);
  EXPECT_NEAR(true_missing_mass(model, synthetic({0, 2, 0})), 0.7, 1e-15);
  EXPECT_THROW(true_missing_mass(model, synthetic({1, 1})), Error);

  const auto one = build_model(ExplicitFamily{{1.0}}, 4);
  Rng rng(0);
  const auto o = draw_multinomial(one, 4, rng);
  EXPECT_EQ(true_missing_mass(one, o), 0.0);
  EXPECT_EQ(xi_statistic(one, o), 0.0);
}

TEST(Statistics, XiAndZetaVanishWithoutSingletonsOrGaps) {
  const auto model = build_model(ExplicitFamily{{0.5, 0.3, 0.2}}, 9);
  const auto o = synthetic({4, 3, 2});
  EXPECT_EQ(xi_statistic(model, o), 0.0);
  EXPECT_EQ(zeta_statistic(model, 9.0, o), 0.0);
  EXPECT_THROW(xi_statistic(model, synthetic({9})), Error);
  EXPECT_THROW(zeta_statistic(model, 9.0, synthetic({9})), Error);
}

TEST(Statistics, XiIdentityOnRandomOutcomes) {
  for (const FamilySpec& family :
       {FamilySpec{ParetoFamily{1.0, 2.0}}, FamilySpec{ExponentialFamily{30.0, 0.0}},
        uniform_family(700)}) {
    const std::int64_t n = 1000;
    const auto model = build_model(family, n);
    Rng rng(17);
    for (int rep = 0; rep < 200; ++rep) {
      const auto o = draw_multinomial(model, n, rng);
      const double q_hat = static_cast<double>(count_frequency(o, 1)) / n;
      const double expected = n * (q_hat - true_missing_mass(model, o));
      EXPECT_NEAR(xi_statistic(model, o), expected, 1e-9 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(Replicates, RecordsAreConsistent) {
  ReplicateConfig config;
  config.family = ParetoFamily{1.0, 2.0};
  config.n = 5000;
  config.replicates = 300;
  config.seed = 7;
  const auto batch = run_replicates(config);
  ASSERT_EQ(batch.records.size(), 300u);
  EXPECT_NEAR(batch.expected_denominator,
              batch.expected_f1 * (1 - batch.expected_f1 / 5000) + 2 * batch.expected_f2, 1e-9);
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    const auto& r = batch.records[i];
    EXPECT_EQ(r.index, static_cast<std::int64_t>(i));
    EXPECT_DOUBLE_EQ(r.q_hat, r.f1 / 5000.0);
    EXPECT_NEAR(r.xi, 5000 * (r.q_hat - r.q_true), 1e-9 * std::max(1.0, std::abs(r.xi)));
    EXPECT_FALSE(r.zeta.has_value());
    ASSERT_TRUE(r.z_expected.has_value());
    EXPECT_NEAR(*r.z_expected, r.xi / std::sqrt(batch.expected_denominator), 1e-9);
    ASSERT_TRUE(r.z_empirical.has_value());
    const double d = variance_from_counts(r.f1, r.f2, 5000, VarianceMode::esty);
    EXPECT_NEAR(*r.z_empirical, r.xi / std::sqrt(d), 1e-9);
  }
}

TEST(Replicates, DeterministicAcrossRunsAndThreadCounts) {
  ReplicateConfig config;
  config.family = ExponentialFamily{1.0, 0.5};
  config.n = 20'000;
  config.replicates = 257;
  config.seed = 0xC0FFEE;
  config.coupled = true;
  config.threads = 1;
  const auto one = run_replicates(config);
  config.threads = 4;
  const auto four = run_replicates(config);
  const auto again = run_replicates(config);
  ASSERT_EQ(one.records.size(), four.records.size());
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    for (const auto* other : {&four, &again}) {
      const auto& a = one.records[i];
      const auto& b = other->records[i];
      EXPECT_EQ(a.f1, b.f1);
      EXPECT_EQ(a.f2, b.f2);
      EXPECT_EQ(a.q_true, b.q_true);
      EXPECT_EQ(a.xi, b.xi);
      EXPECT_EQ(a.zeta, b.zeta);
      EXPECT_EQ(a.poisson_total, b.poisson_total);
    }
  }
  config.seed += 1;
  const auto other_seed = run_replicates(config);
  int differing = 0;
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    differing += one.records[i].q_true != other_seed.records[i].q_true;
  }
  EXPECT_GT(differing, 200);
}

TEST(Replicates, ParetoCltRegimeIsCentered) {
  ReplicateConfig config;
  config.family = ParetoFamily{1.0, 3.0};
  config.n = 1'000'000;
  config.replicates = 2000;
  config.seed = 1;
  const auto batch = run_replicates(config);
  const auto z = z_values(batch, ZKind::expected);
  ASSERT_EQ(z.size(), 2000u);
  const auto s = summarize(z);
  EXPECT_NEAR(s.mean, 0.0, 3 * s.se());
}

TEST(Replicates, DegenerateRegimeIsFlagged) {
  // n p = 20 on every atom: E F1 ~ 2e-6 and E F2 ~ 2e-5.
  ReplicateConfig config;
  config.family = TwoStepFamily{1.0, 50.0, 0.0};
  config.n = 1000;
  config.replicates = 50;
  const auto batch = run_replicates(config);
  EXPECT_GE(batch.degenerate_count, 49);
  for (const auto& r : batch.records) EXPECT_EQ(r.degenerate, !r.z_empirical.has_value());
  EXPECT_THROW(z_values(batch, ZKind::empirical), Error);
}

TEST(Replicates, SecondOrderRegimeHasTinyVarianceOfScaledMass) {
  ReplicateConfig config;
  config.family = TwoStepCase{3, {}};
  config.n = 100'000;
  config.replicates = 5000;
  config.seed = 3;
  const auto batch = run_replicates(config);
  std::vector<double> scaled;
  for (const auto& r : batch.records) scaled.push_back(100'000 * r.q_true);
  EXPECT_LE(summarize(scaled).var, 0.1);
}

TEST(Replicates, RejectsBadConfig) {
  ReplicateConfig config;
  config.replicates = 0;
  EXPECT_THROW(run_replicates(config), Error);
  config.replicates = 10;
  config.n = 0;
  EXPECT_THROW(run_replicates(config), Error);
}

#pragma once

// Monte Carlo sampling of occupancy counts: fixed-size multinomial draws,
// Poissonized draws, and the coupling of the two used to measure how far the
// coverage error xi_n is from its Poissonized counterpart zeta_nn.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "coverage/population.hpp"
#include "coverage/random.hpp"

namespace coverage {

/// Per-species counts aligned with a model's atoms.
struct SampleOutcome {
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;  ///< n for multinomial draws, realized N_lambda otherwise
};

/// Multinomial(n, p) via the conditional-binomial chain
///   X_1 ~ Bin(n, p_1), X_i | X_<i ~ Bin(n - sum X_<i, p_i / sum_{k>=i} p_k).
/// The conditional probabilities are precomputed from tail sums accumulated
/// from the smallest atom upward.
class MultinomialSampler {
 public:
  explicit MultinomialSampler(const PopulationModel& model);

  SampleOutcome draw(std::int64_t n, Rng& rng) const;
  /// Adds a multinomial(n) draw onto `counts` (same length as the model).
  void add_draw(std::int64_t n, Rng& rng, std::span<std::int64_t> counts) const;

  /// Number of atoms whose conditional probability had to be clamped into
  /// [0,1] because the tail sum underflowed.
  std::int64_t underflow_warnings() const { return underflow_warnings_; }

 private:
  std::vector<double> conditional_;
  std::int64_t underflow_warnings_ = 0;
};

/// Independent Poisson(lambda p_i) counts with the exp(-mean) table cached.
class PoissonSampler {
 public:
  PoissonSampler(const PopulationModel& model, double lambda);
  SampleOutcome draw(Rng& rng) const;
  double lambda() const { return lambda_; }

 private:
  double lambda_;
  std::vector<double> means_;
  std::vector<double> exp_neg_;
};

SampleOutcome draw_multinomial(const PopulationModel& model, std::int64_t n, Rng& rng);
SampleOutcome draw_poissonized(const PopulationModel& model, double lambda, Rng& rng);

struct CoupledOutcome {
  SampleOutcome multinomial;  ///< X(n)
  SampleOutcome poissonized;  ///< X(N_n), N_n ~ Poisson(n)
};

/// Draws N ~ Poisson(n) and a shared multinomial(min(n, N)) base; the larger
/// of the two samples adds an independent multinomial(|N - n|) increment.
/// Both marginals are exact.
CoupledOutcome coupled_pair(const MultinomialSampler& sampler, std::int64_t n, Rng& rng);
CoupledOutcome coupled_pair(const PopulationModel& model, std::int64_t n, Rng& rng);

/// sum_i p_i 1{X_i = 0}. Mass discarded by truncation was never sampled and
/// is not included; the model's tail_mass_bound bounds the omission.
double true_missing_mass(const PopulationModel& model, const SampleOutcome& outcome);

/// xi_n = sum_i (1{X_i = 1} - n p_i 1{X_i = 0}) with n = outcome.total;
/// equals n (F1/n - Q_n).
double xi_statistic(const PopulationModel& model, const SampleOutcome& outcome);

/// zeta = sum_i (1{X_i = 1} - lambda p_i 1{X_i = 0}).
double zeta_statistic(const PopulationModel& model, double lambda,
                      const SampleOutcome& outcome);

std::int64_t count_frequency(const SampleOutcome& outcome, std::int64_t j);

struct ReplicateConfig {
  FamilySpec family = ParetoFamily{};
  std::int64_t n = 1000;
  std::int64_t replicates = 1000;
  std::uint64_t seed = 0;
  bool coupled = false;
  std::optional<double> truncation_tolerance;
  /// Worker threads; 0 picks hardware concurrency. Never affects results.
  unsigned threads = 0;
};

struct ReplicateRecord {
  std::int64_t index = 0;
  double q_true = 0.0;
  double q_hat = 0.0;
  std::int64_t f1 = 0;
  std::int64_t f2 = 0;
  double xi = 0.0;
  std::optional<double> zeta;                ///< coupled runs only
  std::optional<std::int64_t> poisson_total; ///< N_n, coupled runs only
  std::optional<double> z_empirical;         ///< empty when degenerate
  std::optional<double> z_expected;          ///< empty when the exact denominator is 0
  bool degenerate = false;  ///< F1 (1 - F1/n) + 2 F2 = 0
};

struct ReplicateBatch {
  ReplicateConfig config;
  std::int64_t kept_atoms = 0;
  double tail_mass_bound = 0.0;
  double expected_f1 = 0.0;
  double expected_f2 = 0.0;
  double expected_denominator = 0.0;  ///< E F1 (1 - E F1/n) + 2 E F2
  double s_n = 0.0;
  std::int64_t degenerate_count = 0;
  std::int64_t underflow_warnings = 0;
  std::vector<ReplicateRecord> records;
};

/// Replicate i uses an engine seeded with substream_seed(config.seed, i), so
/// the batch is a pure function of the config whatever the thread count.
ReplicateBatch run_replicates(const ReplicateConfig& config);
ReplicateBatch run_replicates(const ReplicateConfig& config, const PopulationModel& model);

}  // namespace coverage

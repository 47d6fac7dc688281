#include "coverage/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "coverage/errors.hpp"
#include "coverage/estimator.hpp"
#include "coverage/numeric.hpp"

namespace coverage {

MultinomialSampler::MultinomialSampler(const PopulationModel& model) {
  const auto& probs = model.probs();
  conditional_.resize(probs.size());
  CompensatedSum tail;
  for (std::size_t k = probs.size(); k-- > 0;) {
    tail.add(probs[k]);
    const double rest = tail.value();
    double c = rest > 0.0 ? probs[k] / rest : 1.0;
    if (!(rest > 0.0) || c > 1.0) {
      ++underflow_warnings_;
      c = 1.0;
    }
    conditional_[k] = c;
  }
  conditional_.back() = 1.0;
}

void MultinomialSampler::add_draw(std::int64_t n, Rng& rng,
                                  std::span<std::int64_t> counts) const {
  if (n < 0) throw Error("multinomial: negative sample size");
  if (counts.size() != conditional_.size()) throw Error("multinomial: length mismatch");
  std::int64_t remaining = n;
  for (std::size_t k = 0; k < conditional_.size() && remaining > 0; ++k) {
    const std::int64_t x = binomial_variate(rng, remaining, conditional_[k]);
    counts[k] += x;
    remaining -= x;
  }
}

SampleOutcome MultinomialSampler::draw(std::int64_t n, Rng& rng) const {
  SampleOutcome out;
  out.counts.assign(conditional_.size(), 0);
  add_draw(n, rng, out.counts);
  out.total = n;
  return out;
}

PoissonSampler::PoissonSampler(const PopulationModel& model, double lambda)
    : lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error("poissonized draw: lambda must be finite and nonnegative");
  means_.reserve(model.size());
  exp_neg_.reserve(model.size());
  for (double p : model.probs()) {
    means_.push_back(lambda * p);
    exp_neg_.push_back(std::exp(-lambda * p));
  }
}

SampleOutcome PoissonSampler::draw(Rng& rng) const {
  SampleOutcome out;
  out.counts.resize(means_.size());
  for (std::size_t k = 0; k < means_.size(); ++k) {
    out.counts[k] = poisson_variate(rng, means_[k], exp_neg_[k]);
    out.total += out.counts[k];
  }
  return out;
}

SampleOutcome draw_multinomial(const PopulationModel& model, std::int64_t n, Rng& rng) {
  if (n < 1) throw Error("multinomial: n must be at least 1");
  return MultinomialSampler(model).draw(n, rng);
}

SampleOutcome draw_poissonized(const PopulationModel& model, double lambda, Rng& rng) {
  return PoissonSampler(model, lambda).draw(rng);
}

CoupledOutcome coupled_pair(const MultinomialSampler& sampler, std::int64_t n, Rng& rng) {
  if (n < 1) throw Error("coupled pair: n must be at least 1");
  const std::int64_t big_n = poisson_variate(rng, static_cast<double>(n));
  CoupledOutcome out;
  out.multinomial = sampler.draw(std::min(n, big_n), rng);
  out.poissonized = out.multinomial;
  const std::int64_t gap = big_n - n;
  if (gap > 0)
    sampler.add_draw(gap, rng, out.poissonized.counts);
  else if (gap < 0)
    sampler.add_draw(-gap, rng, out.multinomial.counts);
  out.multinomial.total = n;
  out.poissonized.total = big_n;
  return out;
}

CoupledOutcome coupled_pair(const PopulationModel& model, std::int64_t n, Rng& rng) {
  return coupled_pair(MultinomialSampler(model), n, rng);
}

namespace {

void check_aligned(const PopulationModel& model, const SampleOutcome& outcome) {
  if (outcome.counts.size() != model.size())
    throw Error("outcome has " + std::to_string(outcome.counts.size()) +
                " counts but the model has " + std::to_string(model.size()) + " atoms");
}

double singleton_minus_weighted_zero(const PopulationModel& model, double scale,
                                     const SampleOutcome& outcome) {
  check_aligned(model, outcome);
  const auto& probs = model.probs();
  CompensatedSum acc;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (outcome.counts[k] == 1)
      acc.add(1.0);
    else if (outcome.counts[k] == 0)
      acc.add(-scale * probs[k]);
  }
  return acc.value();
}

}  // namespace

double true_missing_mass(const PopulationModel& model, const SampleOutcome& outcome) {
  check_aligned(model, outcome);
  const auto& probs = model.probs();
  CompensatedSum acc;
  for (std::size_t k = 0; k < probs.size(); ++k)
    if (outcome.counts[k] == 0) acc.add(probs[k]);
  return std::clamp(acc.value(), 0.0, 1.0);
}

double xi_statistic(const PopulationModel& model, const SampleOutcome& outcome) {
  return singleton_minus_weighted_zero(model, static_cast<double>(outcome.total), outcome);
}

double zeta_statistic(const PopulationModel& model, double lambda,
                      const SampleOutcome& outcome) {
  return singleton_minus_weighted_zero(model, lambda, outcome);
}

std::int64_t count_frequency(const SampleOutcome& outcome, std::int64_t j) {
  return std::count(outcome.counts.begin(), outcome.counts.end(), j);
}

ReplicateBatch run_replicates(const ReplicateConfig& config) {
  if (config.n < 1) throw Error("simulate: n must be at least 1");
  BuildOptions options;
  options.truncation_tolerance = config.truncation_tolerance;
  return run_replicates(config, build_model(config.family, config.n, options));
}

ReplicateBatch run_replicates(const ReplicateConfig& config, const PopulationModel& model) {
  if (config.replicates < 1) throw Error("simulate: replicates must be at least 1");
  if (config.n < 1) throw Error("simulate: n must be at least 1");
  const std::int64_t n = config.n;
  const double nd = static_cast<double>(n);

  ReplicateBatch batch;
  batch.config = config;
  batch.kept_atoms = model.truncation().kept_atoms;
  batch.tail_mass_bound = model.truncation().tail_mass_bound;
  batch.expected_f1 = expected_fj(model, n, 1);
  batch.expected_f2 = n >= 2 ? expected_fj(model, n, 2) : 0.0;
  batch.expected_denominator =
      batch.expected_f1 * (1.0 - batch.expected_f1 / nd) + 2.0 * batch.expected_f2;
  batch.s_n = std::sqrt(s_squared(model, nd));

  const MultinomialSampler sampler(model);
  batch.underflow_warnings = sampler.underflow_warnings();
  batch.records.resize(static_cast<std::size_t>(config.replicates));

  auto simulate_one = [&](std::int64_t i) {
    Rng rng(substream_seed(config.seed, static_cast<std::uint64_t>(i)));
    ReplicateRecord r;
    r.index = i;
    SampleOutcome outcome;
    if (config.coupled) {
      auto pair = coupled_pair(sampler, n, rng);
      r.zeta = zeta_statistic(model, nd, pair.poissonized);
      r.poisson_total = pair.poissonized.total;
      outcome = std::move(pair.multinomial);
    } else {
      outcome = sampler.draw(n, rng);
    }
    r.f1 = count_frequency(outcome, 1);
    r.f2 = count_frequency(outcome, 2);
    r.q_true = true_missing_mass(model, outcome);
    r.q_hat = static_cast<double>(r.f1) / nd;
    r.xi = xi_statistic(model, outcome);
    const double denom = variance_from_counts(r.f1, r.f2, n, VarianceMode::esty);
    r.degenerate = !(denom > 0.0);
    if (!r.degenerate) r.z_empirical = z_statistic(r.q_hat, r.q_true, n, denom);
    if (batch.expected_denominator > 0.0)
      r.z_expected = z_statistic(r.q_hat, r.q_true, n, batch.expected_denominator);
    batch.records[static_cast<std::size_t>(i)] = std::move(r);
  };

  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1,
                                 static_cast<unsigned>(std::min<std::int64_t>(
                                     config.replicates, 64)));
  if (threads == 1) {
    for (std::int64_t i = 0; i < config.replicates; ++i) simulate_one(i);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          try {
            for (std::int64_t i = t; i < config.replicates; i += threads) simulate_one(i);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto& r : batch.records) batch.degenerate_count += r.degenerate ? 1 : 0;
  return batch;
}

}  // namespace coverage

#include "coverage/random.hpp"

#include <cmath>

#include "coverage/errors.hpp"

namespace coverage {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 1));
}

double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

std::int64_t poisson_inversion(Rng& rng, double mean, double exp_neg_mean) {
  // Sequential search. The cutoff guards against round-off in the running CDF.
  const double limit = mean + 40.0 * std::sqrt(mean + 1.0) + 40.0;
  for (;;) {
    double u = uniform_open(rng);
    double pk = exp_neg_mean;
    std::int64_t k = 0;
    while (u > pk) {
      u -= pk;
      ++k;
      pk *= mean / static_cast<double>(k);
      if (static_cast<double>(k) > limit) break;
    }
    if (static_cast<double>(k) <= limit) return k;
  }
}

std::int64_t poisson_ptrs(Rng& rng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform_open(rng) - 0.5;
    const double v = uniform_open(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::int64_t>(k);
  }
}

std::int64_t binomial_inversion(Rng& rng, std::int64_t n, double p) {
  const double q = 1.0 - p;
  const double qn = std::exp(static_cast<double>(n) * std::log1p(-p));
  const double np = static_cast<double>(n) * p;
  const double bound = std::min(static_cast<double>(n), np + 10.0 * std::sqrt(np * q + 1.0));
  const double ratio = p / q;
  for (;;) {
    double u = uniform_open(rng);
    double px = qn;
    std::int64_t k = 0;
    bool restart = false;
    while (u > px) {
      u -= px;
      ++k;
      if (static_cast<double>(k) > bound) {
        restart = true;
        break;
      }
      px *= static_cast<double>(n - k + 1) * ratio / static_cast<double>(k);
    }
    if (!restart) return k;
  }
}

std::int64_t binomial_btrs(Rng& rng, std::int64_t n, double p) {
  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double vr = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((nd + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  for (;;) {
    const double u = uniform_open(rng) - 0.5;
    double v = uniform_open(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > nd) continue;
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(k + 1.0) - std::lgamma(nd - k + 1.0) + (k - m) * lpq)
      return static_cast<std::int64_t>(k);
  }
}

}  // namespace

std::int64_t poisson_variate(Rng& rng, double mean) {
  return poisson_variate(rng, mean, std::exp(-mean));
}

std::int64_t poisson_variate(Rng& rng, double mean, double exp_neg_mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw Error("poisson: invalid mean");
  if (mean == 0.0) return 0;
  if (mean < 10.0) return poisson_inversion(rng, mean, exp_neg_mean);
  return poisson_ptrs(rng, mean);
}

std::int64_t binomial_variate(Rng& rng, std::int64_t trials, double p) {
  if (trials < 0) throw Error("binomial: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("binomial: probability outside [0,1]");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  if (p > 0.5) return trials - binomial_variate(rng, trials, 1.0 - p);
  if (static_cast<double>(trials) * p < 10.0) return binomial_inversion(rng, trials, p);
  return binomial_btrs(rng, trials, p);
}

}  // namespace coverage

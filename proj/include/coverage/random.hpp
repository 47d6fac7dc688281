#pragma once

// Seeded random variates with a fixed, documented algorithm per distribution
// so that a given seed reproduces bit-identical streams on any platform:
//
//   engine    std::mt19937_64 (output sequence fixed by the C++ standard)
//   uniform   top 53 bits of one engine output, offset by half an ulp so the
//             value lies strictly inside (0, 1)
//   Poisson   mean < 10: inversion by sequential search from k = 0
//             mean >= 10: PTRS transformed rejection with squeeze (Hormann 1993)
//   binomial  reduced to p <= 1/2 by symmetry;
//             n p < 10: inversion by sequential search from k = 0
//             n p >= 10: BTRS transformed rejection with squeeze (Hormann 1993)

#include <cstdint>
#include <random>

namespace coverage {

using Rng = std::mt19937_64;

/// splitmix64 finalizer (Steele, Lea & Flood): a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for replicate `index` of a batch seeded with `seed`:
/// splitmix64(splitmix64(seed) ^ splitmix64(index + 1)).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform in the open interval (0, 1).
double uniform_open(Rng& rng);

std::int64_t poisson_variate(Rng& rng, double mean);

/// exp(-mean) supplied by the caller; saves one exp() on hot inversion paths.
std::int64_t poisson_variate(Rng& rng, double mean, double exp_neg_mean);

std::int64_t binomial_variate(Rng& rng, std::int64_t trials, double p);

}  // namespace coverage

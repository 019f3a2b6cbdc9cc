#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace coulomb {

/// Every stochastic routine in the library draws from this engine.
using Rng = std::mt19937_64;

/// Seed for stream `index` derived from `master` by one SplitMix64 round on
/// master + (index + 1) * golden-ratio increment. Streams for distinct
/// indices are decorrelated even for consecutive master seeds.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Standard complex gaussian: real and imaginary parts i.i.d. N(0, 1/2).
template <typename Urbg>
std::complex<double> complex_normal(Urbg& rng) {
  std::normal_distribution<double> normal(0.0, 0.70710678118654752440);
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

}  // namespace coulomb

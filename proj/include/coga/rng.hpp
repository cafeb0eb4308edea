#ifndef COGA_RNG_HPP
#define COGA_RNG_HPP

#include <cstdint>
#include <random>

namespace coga {

// Run-level random engine. One instance per simulation run; every stochastic
// step draws from it in a fixed order so a run replays exactly from its seed.
using Rng = std::mt19937_64;

// Uniform double in [0, 1), built from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection sampling, so no modulo bias; consumes
// one draw almost always, more only on rejection.
inline std::uint32_t uniform_below(Rng& rng, std::uint32_t n) {
  const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return static_cast<std::uint32_t>(r % n);
  }
}

// SplitMix64 finalizer, used to spread structured seed material.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for replicate `rep` of grid point `grid` under a batch base seed.
// Batches are reproducible from the base seed alone while individual runs
// stay decorrelated.
inline std::uint64_t derive_run_seed(std::uint64_t base, std::uint64_t grid,
                                     std::uint64_t rep) {
  return splitmix64(splitmix64(base + 0x632BE59BD9B4E019ULL * (grid + 1)) + rep);
}

}  // namespace coga

#endif

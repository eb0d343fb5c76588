#pragma once

#include <cmath>
#include <cstdint>

namespace firebench {

// SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom number
// generators", OOPSLA 2014). The generator is used in counter form: the
// n-th output is a pure function of (seed, n), so any draw in a simulation
// can be addressed directly without replaying the stream. This is the
// reproducibility contract for the stochastic spread model; a
// reimplementation in another language must use these exact constants.
constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// n-th output of SplitMix64 seeded with `seed`, counting from n = 0.
constexpr std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t n) {
  return splitmix64_mix(seed + (n + 1) * kSplitMixGamma);
}

// Upper 53 bits mapped to [0, 1).
constexpr double bits_to_unit(std::uint64_t r) {
  return static_cast<double>(r >> 11) * 0x1.0p-53;
}

// Small sequential PRNG for parameter init and scenario synthesis, where
// only seeded determinism (not counter addressing) is required.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += kSplitMixGamma;
    return splitmix64_mix(state_);
  }

  double uniform() { return bits_to_unit(next()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes two draws.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586 * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace firebench

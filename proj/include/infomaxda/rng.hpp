#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace infomaxda {

// SplitMix64 stream.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// uniform() takes the top 53 bits of a draw and scales by 2^-53, giving [0, 1).
// normal() is Box-Muller: u1 = 1 - uniform() in (0, 1], u2 = uniform(),
// returning sqrt(-2 ln u1) cos(2 pi u2) and caching sqrt(-2 ln u1) sin(2 pi u2)
// for the following call.
// uniform_index(n) is floor(uniform() * n).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t uniform_index(std::size_t n);

  // Independent child stream; the parent advances by one draw.
  Rng split();

  // Fisher-Yates over [0, n): for i = n-1 down to 1, swap(i, uniform_index(i + 1)).
  std::vector<std::size_t> permutation(std::size_t n);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Seed for a sub-run (ablation cell, sweep cell, oracle instance) derived
// from a base seed and a stream index without touching any shared generator.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace infomaxda

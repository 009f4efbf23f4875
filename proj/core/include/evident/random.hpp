#pragma once

#include <cstdint>
#include <vector>

namespace evident {

// Seeded deterministic RNG: xoshiro256++ state initialized from a 64-bit
// seed through splitmix64. Identical seed => identical draw sequence.
// Single-owner; for concurrent use derive independent children via split().
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (second sample cached).
  double normal();

  // Uniform integer in [0, bound); bound >= 1. Unbiased (rejection).
  std::uint64_t uniform_int(std::uint64_t bound);

  // Deterministic child stream: seed = mix(parent_seed, child_index).
  RandomStream split(std::uint64_t child_index) const;

  // Fisher-Yates in-place shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace evident

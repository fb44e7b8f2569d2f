#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace matcher {

std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** seeded from splitmix64. The output sequence is fixed by test
/// vectors so other implementations can reproduce sampling exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  /// Unbiased uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Derives an independent stream seed from a base seed and a salt.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace matcher

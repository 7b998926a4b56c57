#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace simalign {

/// Portable seeded random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All derived draws (bounded integers, permutations, normals) are
/// implemented here rather than through <random> distributions, whose
/// algorithms are implementation-defined, so a given seed yields the same
/// shuffles on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal via the Marsaglia polar method.
  double normal();

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // Uniform random permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent sub-seed for `stream` from `seed` (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace simalign

#pragma once

#include <cstdint>

namespace sobolmat {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from a parent seed and a key; used to split streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return mix64(mix64(seed) ^ (key * 0xd1b54a32d192ed03ULL));
}

/// Counter-based generator: the value depends only on (seed, stream, index),
/// so draws are reproducible independently of evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const {
    return mix64(derive_seed(seed_, stream) ^ mix64(index));
  }
  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    return (static_cast<double>(bits(stream, index) >> 11) + 0.5) * 0x1.0p-53;
  }
  /// Standard normal by Box-Muller on two counter draws.
  double normal(std::uint64_t stream, std::uint64_t index) const;

 private:
  std::uint64_t seed_;
};

}  // namespace sobolmat

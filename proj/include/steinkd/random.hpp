#pragma once

#include <cstdint>
#include <initializer_list>

namespace steinkd {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive 64-bit hash of a tuple of words, used to derive per-cell seeds.
std::uint64_t hash_seed(std::initializer_list<std::uint64_t> words);

/// Counter-based generator: draw k of stream `key` is mix64(key + k * golden).
/// Portable and bit-reproducible; any draw can be recomputed from (key, k).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang (boosted for shape < 1).
  double gamma(double shape);
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace steinkd

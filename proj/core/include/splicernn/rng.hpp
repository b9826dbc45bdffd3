#pragma once

#include <cassert>
#include <cstdint>
#include <string_view>
#include <utility>

namespace splicernn {

// Deterministic 64-bit generator (splitmix64). One fixed algorithm is used
// everywhere instead of the platform default so identical seeds produce
// identical streams on every platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53-bit resolution
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // unbiased integer in [0, n); n must be positive
  std::uint64_t bounded(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= reject_below) return r % n;
    }
  }

  // Fisher-Yates shuffle driven by this generator
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = bounded(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// splitmix64 finalizer; whitens derived seeds
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Child-seed derivation: every randomized component draws its own stream
// from derive_seed(run_seed, "component-name"), so any stage can be re-run
// in isolation without disturbing the others.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view component) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (const char c : component) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return mix64(base ^ mix64(h));
}

// Numeric variant for per-epoch / per-example streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(base ^ mix64(a + 0x9e3779b97f4a7c15ull) ^ mix64(b + 0x517cc1b727220a95ull));
}

}  // namespace splicernn

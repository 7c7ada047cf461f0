#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace lcmt {

// Counter-based generator built on the SplitMix64 finalizer:
//
//   key    = mix64(seed ^ mix64(stream + GAMMA))
//   out_i  = mix64(key + i * GAMMA)        for i = 1, 2, ...
//
// with GAMMA = 0x9E3779B97F4A7C15. Each (seed, stream) pair yields an
// independent, replayable stream; samplers use stream = pair id, which makes
// generation order-independent across workers. Draw conventions:
//
//   next_unit():  (out >> 11) * 2^-53, uniform in [0, 1)
//   bernoulli(p): next_unit() < p
//   bounded(n):   (out * n) >> 64 via 128-bit multiply, uniform in [0, n)
//   shuffle(v):   Fisher-Yates, i = n-1 .. 1, j = bounded(i + 1), swap(v[i], v[j])
//
// Tests replay these formulas with an independent implementation.

inline constexpr std::uint64_t kRngGamma = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream + kRngGamma))) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kRngGamma); }

  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_unit() < p; }

  std::uint64_t bounded(std::uint64_t n) {
    assert(n > 0);
    using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * n) >> 64);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lcmt

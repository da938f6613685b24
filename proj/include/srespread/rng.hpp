#pragma once

#include <cstdint>
#include <initializer_list>

namespace srespread {

// splitmix64 finalizer; full-avalanche bijection on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based splittable stream. The state is a pure function of the
// master seed and the key parts, so any cell of a run (sample, layer,
// pair, ...) owns an independent stream that can be regenerated on demand
// without sharing state between workers.
class SplitStream {
 public:
  explicit SplitStream(std::uint64_t seed) : state_(mix64(seed + kGolden)) {}

  static SplitStream keyed(std::uint64_t seed,
                           std::initializer_list<std::uint64_t> parts) {
    SplitStream s(seed);
    for (std::uint64_t p : parts) {
      s.state_ = mix64(s.state_ + kGolden * (p + 1));
    }
    return s;
  }

  std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform in [0, bound) by masked rejection; exact for any bound >= 1.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t mask = ~0ull >> __builtin_clzll(bound - 1 | 1);
    for (;;) {
      std::uint64_t r = next() & mask;
      if (r < bound) return r;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  std::uint64_t state_;
};

}  // namespace srespread

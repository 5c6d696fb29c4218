#pragma once

#include <cstdint>
#include <string_view>

namespace star {

// splitmix64 step (Vigna, public domain). Used both as the core generator and
// for seed derivation. We avoid <random> engines plus distributions because
// libstdc++ distribution outputs are not bit-stable across library versions,
// and sweep outputs must be byte-reproducible.
inline constexpr uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Order-sensitive fold of b into a (boost-style combine with a splitmix
// finalizer). Used to derive per-episode and per-trial seeds.
inline constexpr uint64_t hash_combine(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  return splitmix64(s);
}

// Folds a string into a seed via FNV-1a.
inline constexpr uint64_t hash_combine(uint64_t a, std::string_view s) {
  uint64_t f = 1469598103934665603ull;
  for (unsigned char c : s) {
    f ^= c;
    f *= 1099511628211ull;
  }
  return hash_combine(a, f);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // One warm-up step so trivially related seeds (0, 1, 2, ...) decorrelate.
    splitmix64(state_);
  }

  uint64_t next() { return splitmix64(state_); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  int uniform_int(int n) {
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

 private:
  uint64_t state_;
};

}  // namespace star

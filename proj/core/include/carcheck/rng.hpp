#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace carcheck {

/// SplitMix64 output function; used for seeding and stream derivation.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministically derive an independent stream seed from a master seed and
/// a sequence of keys (chain index, fold index, draw/district pair, ...).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = master;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t k : keys) {
    state = h ^ (k + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2));
    h = splitmix64(state);
  }
  return h;
}

/// xoshiro256++ (Blackman & Vigna). Small state, cheap to seed, so a fresh
/// generator can be created per (draw, district) task.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256pp(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  friend constexpr bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

 private:
  std::uint64_t state_[4]{};
};

using Rng = Xoshiro256pp;

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace carcheck

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace genoclust {

// splitmix64 (Steele, Lea & Vigna). Used for seeding and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from (seed, key); chain calls to mix
// several keys. Avalanching makes adjacent keys uncorrelated.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t state = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
  return splitmix64(state);
}

// xoshiro256++ (Blackman & Vigna). Fixed algorithm, identical output on every
// platform, which keeps seeded runs byte-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static Rng stream(std::uint64_t seed, std::uint64_t key) {
    return Rng(mix_seed(seed, key));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1); 53-bit resolution.
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform01()); }

  // Index draw proportional to non-negative weights (need not be normalized).
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform01() * total;
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < weights.size(); ++j) {
      acc += weights[j];
      if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace genoclust

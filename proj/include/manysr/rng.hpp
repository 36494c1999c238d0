// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace manysr {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Hashes (seed, tag, a, b) into an independent stream seed. Every random
/// decision in the pipeline derives its stream from the run seed plus a
/// purpose tag and counters, so any point of a run can be reproduced without
/// replaying the sequential RNG history (this is what makes checkpoint
/// resume bit-exact).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = 0xCBF29CE484222325ull ^ seed;
  for (char ch : tag) {
    h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001B3ull;
  }
  h ^= a + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  h ^= b + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  std::uint64_t s = h;
  splitmix64(s);
  return splitmix64(s);
}

/// Seeded generator with distribution code written out explicitly
/// (Box-Muller, rejection sampling) so streams are identical across
/// platforms and standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng derive(std::uint64_t seed, std::string_view tag,
                    std::uint64_t a = 0, std::uint64_t b = 0) {
    return Rng(derive_seed(seed, tag, a, b));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform integer in [0, n), unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t n) {
    assert(n > 0);
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0 - un) % un;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return static_cast<std::int64_t>(r % un);
    }
  }

  template <typename T>
  void fill_normal(T* dst, std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) dst[i] = static_cast<T>(normal());
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace manysr

// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace hvp {

// splitmix64 finalizer
inline constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr uint64_t hash_combine(uint64_t a, uint64_t b) {
  return mix64(a + 0x9E3779B97F4A7C15ull * (b + 1));
}

// Counter-based generator: the stream is a pure function of (key, counter),
// so draws are reproducible independent of execution order or interleaving.
class Rng {
 public:
  explicit Rng(uint64_t key) : key_(key) {}

  // derive a stream key from up to four components
  static Rng keyed(uint64_t seed, uint64_t tag, uint64_t a = 0, uint64_t b = 0,
                   uint64_t c = 0) {
    uint64_t k = hash_combine(seed, tag);
    k = hash_combine(k, a);
    k = hash_combine(k, b);
    k = hash_combine(k, c);
    return Rng(k);
  }

  uint64_t next_u64() { return mix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  // uniform in [0,1), 24-bit resolution
  float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }

  // uniform integer in [0, n); n > 0
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  bool bernoulli(float p) { return next_float() < p; }

  // in-place Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

// stream tags (distinct domains so related keys never collide)
namespace rngtag {
inline constexpr uint64_t kPermutation = 0x7065726d;   // batch shuffling
inline constexpr uint64_t kAugment = 0x61756770;       // view parameter sampling
inline constexpr uint64_t kJitterShared = 0x6a697453;  // static-appearance jitter
inline constexpr uint64_t kInit = 0x696e6974;          // model initialization
inline constexpr uint64_t kSelect = 0x73656c65;        // random-mode pair choice
inline constexpr uint64_t kPairCap = 0x70636170;       // pair-cap subsampling
inline constexpr uint64_t kSynth = 0x73796e74;         // synthetic dataset
inline constexpr uint64_t kProbe = 0x70726f62;         // linear-probe shuffling
}  // namespace rngtag

}  // namespace hvp

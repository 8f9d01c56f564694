#pragma once

#include <cmath>
#include <cstdint>

namespace allelo {

/// SplitMix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Counter-based generator: the i-th draw of a key is a pure function of
/// (key, i), so any stream can be split off and regenerated independently.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

  /// Child key for a tag; children of distinct tags are independent streams.
  constexpr CounterRng split(std::uint64_t tag) const {
    CounterRng c(0);
    c.key_ = mix64(key_ ^ mix64(tag + kGolden));
    return c;
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Exponential with the given rate.
  double exponential(std::uint64_t counter, double rate) const {
    return -std::log1p(-uniform(counter)) / rate;
  }

  constexpr std::uint64_t key() const { return key_; }

  static constexpr CounterRng from_key(std::uint64_t key) {
    CounterRng c(0);
    c.key_ = key;
    return c;
  }

 private:
  std::uint64_t key_;
};

/// Sequential wrapper over a CounterRng, for callers that just want a stream.
class SequentialRng {
 public:
  explicit SequentialRng(CounterRng rng) : rng_(rng) {}

  double uniform() { return rng_.uniform(counter_++); }
  double exponential(double rate) { return rng_.exponential(counter_++, rate); }
  std::uint64_t bits() { return rng_.bits(counter_++); }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace allelo

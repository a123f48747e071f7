#pragma once

#include <cstdint>
#include <limits>

namespace bwpart {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent master seed for one purpose (table building,
/// end-to-end outage, fading...) from a user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

/// Counter-based stream: the k-th output is mix64(key + k * gamma) with the
/// key derived from (seed, stream). Replication i always sees the same
/// numbers no matter which thread runs it. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform on (0, 1], safe as a log argument.
  double uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

}  // namespace bwpart

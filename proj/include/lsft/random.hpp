#pragma once

#include <cstdint>
#include <utility>

namespace lsft {

/// Counter-based generator: every draw is a pure function of (seed, index).
///
///   key       = mix64(seed)
///   bits(i)   = mix64(key + (i + 1)·0x9E3779B97F4A7C15)
///   uniform(i)= ((bits(i) >> 11) + 0.5)·2⁻⁵³            in (0, 1)
///   normal(2m)   = r·cos θ,  normal(2m+1) = r·sin θ,
///   with r = √(−2 ln uniform(2m)) and θ = 2π·uniform(2m+1)
///
/// mix64 is the SplitMix64 finalizer. Streams for sub-tasks are split off
/// with derive_seed, so trials can be generated in any order or in parallel
/// and still reproduce the same values.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed);

  std::uint64_t bits(std::uint64_t index) const;
  double uniform(std::uint64_t index) const;
  double normal(std::uint64_t index) const;
  /// {normal(2m), normal(2m+1)} from one Box–Muller evaluation.
  std::pair<double, double> normal_pair(std::uint64_t m) const;

 private:
  std::uint64_t key_;
};

std::uint64_t mix64(std::uint64_t z);

/// Seed for an independent sub-stream of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace lsft

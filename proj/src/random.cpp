#include "lsft/random.hpp"

#include <cmath>
#include <numbers>

namespace lsft {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + kGolden));
}

CounterRng::CounterRng(std::uint64_t seed) : key_(mix64(seed)) {}

std::uint64_t CounterRng::bits(std::uint64_t index) const {
  return mix64(key_ + (index + 1) * kGolden);
}

double CounterRng::uniform(std::uint64_t index) const {
  return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
}

std::pair<double, double> CounterRng::normal_pair(std::uint64_t m) const {
  const double r = std::sqrt(-2.0 * std::log(uniform(2 * m)));
  const double theta = 2.0 * std::numbers::pi * uniform(2 * m + 1);
  return {r * std::cos(theta), r * std::sin(theta)};
}

double CounterRng::normal(std::uint64_t index) const {
  const auto [even, odd] = normal_pair(index / 2);
  return index % 2 == 0 ? even : odd;
}

}  // namespace lsft

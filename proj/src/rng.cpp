#include "abplab/rng.hpp"

#include <cmath>
#include <numbers>

namespace abplab {

std::uint64_t CounterRng::mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
  constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(next_u64() >> 11) + 0.5) * kInv53;
}

double CounterRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * (uniform() - 0.5 / 9007199254740992.0);
}

double CounterRng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t stream_id(std::uint64_t a, std::uint64_t b) {
  return CounterRng::mix64(CounterRng::mix64(a) + b * CounterRng::kGolden);
}

}  // namespace abplab

#pragma once

#include <cstdint>

namespace abplab {

/// Counter-based 64-bit generator.
///
/// Output i (i = 1, 2, ...) of the stream (seed, stream) is
///
///     key   = mix64(seed ^ mix64(stream + GOLDEN))
///     out_i = mix64(key + i * GOLDEN)
///
/// where mix64 is the SplitMix64 finalizer and GOLDEN = 0x9E3779B97F4A7C15.
/// Uniform doubles take the top 53 bits; normals use the cosine branch of
/// Box-Muller on two consecutive uniforms. Everything is integer arithmetic
/// except the final Box-Muller transform, so streams are reproducible in any
/// language that has 64-bit wrapping multiplication.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static std::uint64_t mix64(std::uint64_t z);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Combine two words into a stream id (order sensitive).
std::uint64_t stream_id(std::uint64_t a, std::uint64_t b);

}  // namespace abplab

#pragma once

#include <cstdint>
#include <limits>

namespace pdettc {

/// Counter-based random stream: the value at (seed, stream, counter) is a pure
/// function of the triple, so independent consumers never share state.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
      : seed_(seed), stream_(stream), counter_(counter) {}

  static std::uint64_t value_at(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t counter);

  std::uint64_t next_u64() { return value_at(seed_, stream_, counter_++); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// A fresh stream keyed by this stream's identity and `id`; the parent
  /// counter is untouched.
  RngStream child(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  // UniformRandomBitGenerator
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

/// Order-sensitive 64-bit mix of two keys.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

}  // namespace pdettc

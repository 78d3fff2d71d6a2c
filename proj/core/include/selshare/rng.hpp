#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace selshare {

/// Mixes a domain tag and an index into a stream identifier.
std::uint64_t stream_key(std::uint64_t domain, std::uint64_t index) noexcept;

/// Seeded, splittable random stream (xoshiro256++ keyed by splitmix64 of
/// (seed, stream_id)). Identical (seed, stream_id) pairs replay identical
/// sequences, so per-subject or per-offer streams stay reproducible no matter
/// how work is scheduled. A stream must not be shared between threads.
///
/// Satisfies UniformRandomBitGenerator, so it can drive <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1).
  double uniform_open() noexcept;
  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal draw (Marsaglia polar method; the second value of each pair is cached).
  double normal() noexcept;
  /// Poisson draw with unit mean.
  int poisson_unit() noexcept;

  /// Child stream derived from this stream's identity (not its position).
  RngStream split(std::uint64_t sub) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace selshare

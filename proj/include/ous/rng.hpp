#pragma once

#include <cstdint>

namespace ous {

/// Seeded SplitMix64 stream.
///
/// Substreams are derived from the seed alone, never from the current
/// position, so `derive(k)` returns the same stream no matter how many draws
/// the parent has already produced. Streams are single-owner; parallel
/// workers each derive their own.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    return mix(z);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  RngStream derive(std::uint64_t index) const noexcept {
    return RngStream(mix(seed_ ^ mix(index + 0x632BE59BD9B4E019ull)));
  }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace ous

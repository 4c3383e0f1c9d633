#pragma once

#include <cstdint>

namespace forgetting {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministic, splittable random stream.
///
/// A stream is identified by (seed, stream id), so every epoch, row or
/// bootstrap resample can own an independent generator and results do not
/// depend on evaluation order. The generator is xoshiro256** seeded through
/// splitmix64; doubles use the top 53 bits, which keeps output identical
/// across standard libraries (unlike std::uniform_real_distribution).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t s_[4];
};

}  // namespace forgetting

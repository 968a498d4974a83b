#pragma once

#include <array>
#include <cstdint>

namespace lrange {

/// Philox4x32-10 counter-based generator.
///
/// A generator is identified by (seed, stream); the stream id occupies the
/// high half of the 128-bit counter, so `split(k)` yields an independent
/// sequence without touching the parent. Output depends only on integer
/// arithmetic, so sequences are identical on every platform.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  /// Child generator on a derived stream.
  Philox split(std::uint64_t child) const {
    return Philox(seed_, mix(stream_ * 0x9E3779B97F4A7C15ULL + child + 1));
  }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (caches the second variate).
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  static std::uint64_t mix(std::uint64_t z);
  std::array<std::uint32_t, 4> block(std::uint64_t counter) const;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lrange

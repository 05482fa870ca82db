#pragma once

#include "maxzero/numerics.hpp"

#include <array>
#include <cstddef>
#include <cstdint>

namespace maxzero {

/// Stream label for replication `replication`, slot `slot`.
///
/// Monte Carlo replication r draws its data from slot 0 and bootstrap draw j
/// from slot j; a stand-alone test uses replication 0. Keeping the address
/// fixed means any cell of an experiment can be rerun in isolation.
[[nodiscard]] constexpr std::uint64_t stream_id(std::uint64_t replication,
                                                std::uint64_t slot) noexcept {
  return (replication << 32) ^ (slot & 0xffffffffULL);
}

/// Deterministic random stream keyed by (master seed, stream id).
///
/// The 256-bit xoshiro256** state is seeded by running SplitMix64 over a mix of
/// both keys, so streams are addressable without coordination and a stream
/// with the same keys always replays the same sequence. Not thread-safe: each
/// worker owns its streams.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

  [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_seed_; }
  [[nodiscard]] std::uint64_t id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// One standard normal per uniform (inverse CDF), so draw positions are stable.
  double normal() noexcept;

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
};

/// n standard normal variates from `stream`.
[[nodiscard]] Vector draw_std_normals(RngStream& stream, std::size_t n);

}  // namespace maxzero

#include "maxzero/rng.hpp"

#include <bit>

namespace maxzero {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
    : master_seed_(master_seed), stream_id_(stream_id) {
  // Hash the stream id on its own first so neighbouring ids land far apart.
  std::uint64_t id_mix = stream_id ^ 0x6a09e667f3bcc909ULL;
  const std::uint64_t id_hash = splitmix64(id_mix);
  std::uint64_t x = master_seed ^ std::rotl(id_hash, 17);
  splitmix64(x);
  for (auto& word : state_) word = splitmix64(x);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double RngStream::uniform_open() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * (static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
}

double RngStream::normal() noexcept { return normal_quantile(uniform_open()); }

Vector draw_std_normals(RngStream& stream, std::size_t n) {
  Vector out(static_cast<Eigen::Index>(n));
  for (Eigen::Index t = 0; t < out.size(); ++t) out[t] = stream.normal();
  return out;
}

}  // namespace maxzero

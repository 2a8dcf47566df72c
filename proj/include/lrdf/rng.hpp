#pragma once

// Counter-based random numbers (Philox4x32-10).
//
// A stream is addressed by (master seed, stream index, substream index); the
// generator state is just a block counter, so any replicate can be produced
// independently of every other one and of thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "core.hpp"

namespace lrdf {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxBlock philox4x32_10(PhiloxBlock c, PhiloxKey k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(M0) * c[0];
    const std::uint64_t p1 = std::uint64_t(M1) * c[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

/// Deterministic stream: key = master seed, counter = (block, stream, substream).
class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, std::uint32_t stream = 0, std::uint32_t substream = 0)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream), substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = (*this)();
    return (hi << 32) | (*this)();
  }

  /// Uniform on the open interval (0,1), 53-bit resolution.
  double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    buf_ = philox4x32_10({std::uint32_t(block_), std::uint32_t(block_ >> 32), stream_, substream_}, key_);
    ++block_;
    pos_ = 0;
  }

  PhiloxKey key_;
  std::uint32_t stream_, substream_;
  std::uint64_t block_ = 0;
  PhiloxBlock buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream for replicate `rep` of the T-ladder entry `t_index`; `purpose`
/// separates independent uses within one replicate (field draw, surrogate, ...).
inline PhiloxStream replicate_stream(std::uint64_t master_seed, std::uint32_t t_index, std::uint32_t rep,
                                     std::uint32_t purpose = 0) {
  return PhiloxStream(master_seed, rep, (t_index & 0xFFFFu) | (purpose << 16));
}

}  // namespace lrdf

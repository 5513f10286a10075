#pragma once

/**
 * @file rng.hpp
 * @brief Counter-based random streams (Philox4x32-10).
 *
 * Every random quantity in a simulation is addressed by
 * (master seed, role, trial, antenna) plus a block index, so draws do not
 * depend on scheduling, worker count, or the order trials are visited in.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ditherdac {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

enum class StreamRole : std::uint32_t {
  Signal = 1,
  Dither = 2,
  Input = 3,  // test-input generation in validation runs
};

struct StreamKey {
  std::uint64_t seed = 0;
  StreamRole role = StreamRole::Signal;
  std::uint32_t trial = 0;
  std::uint32_t antenna = 0;
};

/// Sequential view over the blocks of one stream.
class CounterStream {
 public:
  explicit CounterStream(const StreamKey& key)
      : key_{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)},
        base_{key.trial, key.antenna, static_cast<std::uint32_t>(key.role)} {}

  PhiloxCounter next_block() {
    return philox4x32_10({base_[0], base_[1], base_[2], block_++}, key_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform() {
    if (used_ >= 2) {
      buffer_ = next_block();
      used_ = 0;
    }
    const std::uint64_t hi = buffer_[2 * used_];
    const std::uint64_t lo = buffer_[2 * used_ + 1];
    ++used_;
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second deviate of each pair is cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1]
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  PhiloxKey key_;
  std::array<std::uint32_t, 3> base_;
  std::uint32_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ditherdac

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nlerg {

/// Philox4x32-10 (Salmon et al., Random123). Stateless: the output is a pure
/// function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Uniform on (0, 1): 52 random bits at bin midpoints, so 0 and 1 are unreachable.
inline double uniform53(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 20) ^ (std::uint64_t{lo} >> 12);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> normal_pair(const Philox4x32::Counter& block) {
  const double u1 = uniform53(block[0], block[1]);
  const double u2 = uniform53(block[2], block[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Random stream addressed by (seed, particle, step, stream, purpose). Each
/// address yields an independent sequence of blocks.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t particle, std::uint32_t step, std::uint32_t stream,
                std::uint32_t purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        particle_(particle),
        step_(step),
        stream_(stream),
        purpose_(purpose) {}

  Philox4x32::Counter block(std::uint32_t index) const {
    return Philox4x32::apply({particle_, step_, stream_, (purpose_ << 16) | (index & 0xFFFFu)}, key_);
  }

  double uniform(std::uint32_t index) const {
    const auto b = block(index);
    return uniform53(b[0], b[1]);
  }

  /// Standard normal number k of this address.
  double normal(std::uint32_t k) const { return normal_pair(block(k / 2))[k % 2]; }

 private:
  Philox4x32::Key key_;
  std::uint32_t particle_, step_, stream_, purpose_;
};

}  // namespace nlerg

#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless: the
// output is a pure function of (counter, key), so any sample can be drawn
// independently of evaluation order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace beamsense {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Streams keep independent consumers of one seed apart.
enum class RngStream : std::uint32_t { kQuadrature = 1, kTrace = 2 };

inline PhiloxKey seed_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// 53-bit uniform in (0, 1].
inline double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

/// Two uniforms in (0, 1] for (stream, index, slot).
inline std::pair<double, double> uniform_pair(std::uint64_t seed, RngStream stream,
                                              std::uint64_t index, std::uint32_t slot) {
  const auto r = philox4x32({slot, static_cast<std::uint32_t>(index),
                             static_cast<std::uint32_t>(index >> 32),
                             static_cast<std::uint32_t>(stream)},
                            seed_key(seed));
  return {to_unit_open_closed(r[0], r[1]), to_unit_open_closed(r[2], r[3])};
}

/// Two independent standard normals (Box-Muller) for (stream, index, slot).
inline std::pair<double, double> normal_pair(std::uint64_t seed, RngStream stream,
                                             std::uint64_t index, std::uint32_t slot) {
  const auto [u1, u2] = uniform_pair(seed, stream, index, slot);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace beamsense

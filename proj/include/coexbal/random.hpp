#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace coexbal {

// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine. The
// standard distributions are implementation-defined; this keeps generated
// data identical across standard libraries.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based standard normal draw: a pure function of (seed, a, b), so
// draws can be evaluated in any order. Box-Muller on two hashed uniforms.
inline double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t base = splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b);
  const double u1 = (static_cast<double>(splitmix64(base) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(splitmix64(base + 1) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace coexbal

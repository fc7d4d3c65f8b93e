#include "mbvd/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace mbvd {

double counter_normal(std::uint64_t key, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(key);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c * 0x8cb92ba72f3d8dd7ULL));
  const std::uint64_t h2 = splitmix64(h);
  // 53-bit uniforms in (0, 1]
  const double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mbvd

#pragma once

#include <cstdint>
#include <random>

namespace mbvd {

using Rng = std::mt19937_64;

// Independent generator for a named sub-stream of a run seed, so that adding a
// consumer on one stream never shifts the draws seen by another.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

namespace rng_streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kImaginationInit = 2;
inline constexpr std::uint64_t kActing = 3;
inline constexpr std::uint64_t kTraining = 4;
inline constexpr std::uint64_t kEnvSeeds = 5;
inline constexpr std::uint64_t kEval = 6;
}  // namespace rng_streams

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard normal draw addressed by (key, a, b, c). Used for reparameterization
// noise so a batch element's noise does not depend on the batch's padded length.
double counter_normal(std::uint64_t key, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace mbvd

#pragma once

#include <cstdint>
#include <random>

namespace gmmot {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed for sub-computation `stream` of `seed`.
/// Any sub-computation can be replayed in isolation from (seed, stream).
constexpr Seed split_seed(Seed seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Stream tags, one per consumer of randomness.
namespace stream {
inline constexpr std::uint64_t em_init = 1;
inline constexpr std::uint64_t em_reseed = 2;
inline constexpr std::uint64_t sample = 3;
inline constexpr std::uint64_t barycenter_init = 4;
inline constexpr std::uint64_t dadil_init = 5;
inline constexpr std::uint64_t toy = 6;
inline constexpr std::uint64_t fit_class = 7;
}  // namespace stream

inline Engine make_engine(Seed seed, std::uint64_t stream_tag) {
  return Engine(split_seed(seed, stream_tag));
}

}  // namespace gmmot

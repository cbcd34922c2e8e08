#pragma once

#include <cstdint>
#include <random>

namespace phantom {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for work item `index` under a master seed. Streams do
/// not depend on how work is split across threads.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)),
                    static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                    static_cast<std::uint32_t>(splitmix64(index ^ 0x5bd1e995ULL)),
                    static_cast<std::uint32_t>(splitmix64(index ^ 0x5bd1e995ULL) >> 32)};
  return Rng(seq);
}

}  // namespace phantom

#pragma once

#include <cstdint>
#include <random>

namespace fissura {

/// splitmix64 step; used to derive independent stream seeds from one
/// master seed without correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive the seed for substream `index` of a keyed family.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t key,
                                    std::uint64_t index = 0) {
  return mix_seed(mix_seed(master ^ key) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace fissura

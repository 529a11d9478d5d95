#pragma once

#include <cstdint>
#include <random>

namespace bwprio {

using Rng = std::mt19937_64;

// Independent randomness sources inside one simulated world. Each stream is
// seeded separately so that changing one buyer's bid never shifts the draws
// seen by demand generation or tie-breaking.
enum class Stream : std::uint64_t {
  kDemand = 1,
  kTieBreak = 2,
  kResample = 3,
  kPoolSplit = 4,
  kRun = 5,
  kSeller = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ (index * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

// Uniform draw on [0, 1) from the top 53 bits; independent of the
// library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace bwprio

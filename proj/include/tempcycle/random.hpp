#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace tempcycle {

/// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection; stable across standard libraries.
inline uint64_t uniform_index(std::mt19937_64& rng, uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named per-component random streams derived from one master seed.
enum class Stream : uint64_t { Init = 1, Shuffle, Augment, Buffer, Synth };

inline uint64_t derive_seed(uint64_t master, Stream stream, uint64_t a = 0, uint64_t b = 0) {
  uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<uint64_t>(stream));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
}

}  // namespace tempcycle

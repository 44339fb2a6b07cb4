#pragma once

#include <cstdint>
#include <random>

namespace mad {

// splitmix64 finalizer; good enough to decorrelate seed streams.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic per-purpose engine: same (seed, stream) -> same sequence.
// Stream ids keep collection, init, batching and evaluation independent.
inline std::mt19937_64 seeded_engine(uint64_t seed, uint64_t stream = 0) {
  return std::mt19937_64(mix64(seed ^ mix64(stream)));
}

}  // namespace mad

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace s2vec {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

// Independent sub-stream keyed by (seed, label, index). Used for per-walk,
// per-graph and per-epoch streams so results never depend on evaluation order.
inline Rng substream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  return Rng(mix_seed(mix_seed(seed, hash_string(label)), index));
}

}  // namespace s2vec

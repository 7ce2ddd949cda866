#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace infoest {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

// FNV-1a over a label string; used to give each computation its own stream
// family so different estimators never share a random sequence.
inline std::uint64_t stream_tag(std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t base_seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(base_seed, stream));
}

// Engine for batch `index` of the computation named `label`.
inline std::mt19937_64 make_engine(std::uint64_t base_seed, std::string_view label,
                                   std::uint64_t index) {
  return make_engine(base_seed, mix_seed(stream_tag(label), index));
}

}  // namespace infoest

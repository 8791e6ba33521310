#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uniclip {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a hash of a stream name.
constexpr std::uint64_t name_hash(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named substream of a root seed ("data", "augment", "init", ...).
inline Rng substream(std::uint64_t root_seed, std::string_view name) {
  return Rng(mix64(root_seed ^ mix64(name_hash(name))));
}

/// Counter-based stream keyed on (seed, index); generation per index is order-independent.
inline Rng indexed_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(mix64(mix64(seed) + mix64(index + 0x632be59bd9b4e019ULL)));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace uniclip

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace lifelong {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream identifiers are hashed names so that call sites read as
/// `make_rng(seed, stream_id("tasks"))`.
constexpr std::uint64_t stream_id(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Split function: an independent generator seed for (run seed, stream).
/// Two different streams of the same seed never share a state sequence in
/// practice, and the mapping is stable across platforms.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(derive_seed(seed, stream));
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

/// Fills `n` standard normal draws using one distribution object, so the
/// polar method's paired value is not discarded.
inline void fill_standard_normal(Rng& rng, double* out, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) out[i] = dist(rng);
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

}  // namespace lifelong

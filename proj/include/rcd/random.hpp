#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rcd {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective avalanche mix of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a over the bytes of `s`, continuing from `h`.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream seeds depend only on their identifying keys, never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t key) noexcept {
  return mix64(master ^ mix64(key));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view key) noexcept {
  return derive_seed(master, fnv1a64(key));
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace rcd

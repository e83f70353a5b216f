#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace toporeg {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent seed for a named consumer, e.g.
/// sub_seed(cfg.seed, "folds") or sub_seed(cfg.seed, "inner", outer_index).
constexpr std::uint64_t sub_seed(std::uint64_t seed, std::string_view name,
                                 std::uint64_t index = 0) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(seed ^ h) + index);
}

}  // namespace toporeg

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace elemantra {

using Rng = std::mt19937_64;

// splitmix64 finalizer; good avalanche for sub-seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Labeled sub-seed: independent, reproducible streams per component.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
  return mix64(master ^ mix64(fnv1a(label)));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace elemantra

#pragma once

// Counter-based hashing for seeded, order-independent sampling decisions.
// Every random choice in the pipeline is a pure function of (seed, stable key).

#include <cstdint>
#include <string_view>

namespace rlfkit {

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t keyed_hash(std::uint64_t seed, std::string_view key) noexcept {
  return splitmix64(splitmix64(seed) ^ fnv1a64(key));
}

/// Uniform draw in [0, 1) with 53 bits of resolution.
constexpr double keyed_uniform(std::uint64_t seed, std::string_view key) noexcept {
  return static_cast<double>(keyed_hash(seed, key) >> 11) * 0x1.0p-53;
}

}  // namespace rlfkit

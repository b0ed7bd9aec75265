#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace clp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used to turn purpose tags into stream identifiers.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for the stream identified by (master, index, purpose). Distinct
/// purposes never share a stream.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::string_view purpose) noexcept {
  return mix64(mix64(master ^ hash_tag(purpose)) + mix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based uniform in [0,1): the value depends only on (seed, counter),
/// never on the order in which counters are visited.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
  const std::uint64_t bits = mix64(mix64(seed) ^ mix64(counter ^ 0xd1b54a32d192ed03ULL));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace clp

#pragma once

#include <cstdint>

namespace nakags {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stateless generator: the draw for (seed, key, counter) is a pure function
/// of its arguments, so results never depend on evaluation order or threads.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t key, std::uint64_t counter) noexcept {
    return mix64(mix64(mix64(seed) ^ key) ^ (counter * 0xd1342543de82ef95ULL + 1));
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t key, std::uint64_t counter) noexcept {
    return static_cast<double>(counter_hash(seed, key, counter) >> 11) * 0x1.0p-53;
}

}  // namespace nakags

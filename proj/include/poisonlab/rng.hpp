#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace poisonlab {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4bd49d0a5b3dfULL;
    return z ^ (z >> 31);
}

/// Deterministic child seed for a named stream ("env", "agent", "attack", ...).
/// Independent components of one run draw from disjoint streams so that
/// adding or removing one component never shifts another's randomness.
inline std::uint64_t child_seed(std::uint64_t master, std::string_view tag) {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return mix64(master ^ h);
}

inline Rng make_rng(std::uint64_t master, std::string_view tag) {
    return Rng(child_seed(master, tag));
}

} // namespace poisonlab

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ctpm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a; std::hash is not stable across standard libraries.
inline std::uint64_t stable_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent stream seed for one (post, run) pair.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view post_id, std::uint64_t run_index) {
    return splitmix64(splitmix64(base_seed ^ stable_hash(post_id)) + run_index);
}

}  // namespace ctpm

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace palmmark {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// 64-bit FNV-1a, used to turn scenario keys and config text into words.
constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/**
 * Substream seed for replication `rep` of the scenario identified by `key`:
 *
 *   seed = mix64(mix64(master ^ mix64(fnv1a64(key))) + rep)
 *
 * Distinct (key, rep) pairs give statistically independent streams.
 */
constexpr std::uint64_t substream_seed(std::uint64_t master, std::string_view key, std::uint64_t rep) {
    return mix64(mix64(master ^ mix64(fnv1a64(key))) + rep);
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32)};
    return Rng(seq);
}

}  // namespace palmmark

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace selfselect {

/// SplitMix64 finalizer; used only to derive substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a stream name, so substreams can be addressed by tag.
constexpr std::uint64_t tag_hash(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of substream (tag, index) under a top-level seed. Distinct tags or
/// indices give statistically unrelated streams.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag,
                                       std::uint64_t index = 0) {
    return mix64(mix64(seed ^ tag_hash(tag)) + mix64(index + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    return Engine(substream_seed(seed, tag, index));
}

}  // namespace selfselect

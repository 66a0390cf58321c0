#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace tyfo {

// splitmix64: tiny portable PRNG. Every stochastic choice in this project
// (weight init, batch shuffling, synthetic fixtures) goes through it so that
// runs are bit-identical across platforms and standard-library versions.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in the open interval (0, 1).
    double next_unit() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Uniform integer in [0, n). Modulo bias is irrelevant here; determinism is not.
    uint64_t below(uint64_t n) { return next() % n; }
};

// FNV-1a over raw bytes. Keyed token hashing for the deterministic embedder.
inline uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Fisher-Yates with SplitMix64; std::shuffle is implementation-defined.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace tyfo

#pragma once

#include <cstdint>
#include <random>

namespace cellmorph {

// All randomness in the project flows through explicitly passed Rng objects
// so that every operation is reproducible from a single seed.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Derives an independent stream from (seed, stream_id). Used to decouple
// e.g. weight init, data shuffling and augmentation draws so that changing
// one consumer does not shift the others.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream_id) {
    const std::uint64_t mix = stream_id ^ 0x9e3779b97f4a7c15ULL;
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(mix),
                      std::uint32_t(mix >> 32)};
    return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(rng);
}

// Uniform integer in [lo, hi] inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace cellmorph

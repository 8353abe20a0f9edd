#pragma once
// Counter-based deterministic RNG ("scrng" v1).
//
// Every draw is a pure function of (seed, stream, counter), so results do not
// depend on call order or thread scheduling. Streams are split per unit id /
// trial index by the callers.

#include <cstdint>

namespace skillcom {

inline constexpr const char* kRngName = "scrng-v1";

// splitmix64 finalizer
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t rng_u64(uint64_t seed, uint64_t stream, uint64_t counter) {
    uint64_t h = mix64(seed);
    h = mix64(h ^ mix64(stream ^ 0xa5a5a5a5a5a5a5a5ULL));
    h = mix64(h ^ mix64(counter ^ 0x5c5c5c5c5c5c5c5cULL));
    return h;
}

// uniform in [0, 1)
inline double rng_uniform(uint64_t seed, uint64_t stream, uint64_t counter) {
    return static_cast<double>(rng_u64(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// derive an independent child seed (e.g. one per Monte Carlo trial)
inline uint64_t rng_derive_seed(uint64_t seed, uint64_t stream) {
    return rng_u64(seed, stream, 0xfeedfacecafebeefULL);
}

}  // namespace skillcom

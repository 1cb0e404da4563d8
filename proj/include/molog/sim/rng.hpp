// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace molog::sim {

// Counter-based randomness: every draw is a pure function of (seed, ids...).
// Event ordering can never perturb draws, so a run replays bit-identically
// and sweeping a parameter that does not enter the draw (like gamma) sees
// the same world.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix(uint64_t a) { return splitmix64(a); }

template <typename... Rest>
inline uint64_t mix(uint64_t a, uint64_t b, Rest... rest) {
    return mix(splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull)), rest...);
}

/// Uniform double in [0, 1) from a mixed counter.
template <typename... Ids>
inline double uniform01(uint64_t seed, Ids... ids) {
    return double(mix(seed, uint64_t(ids)...) >> 11) * 0x1.0p-53;
}

/// Bernoulli(p) draw addressed by identity. Inverse-transform form keeps
/// outcomes monotone in p under a fixed seed.
template <typename... Ids>
inline bool chance(double p, uint64_t seed, Ids... ids) {
    return uniform01(seed, ids...) < p;
}

/// Uniform integer in [0, n).
template <typename... Ids>
inline uint64_t pick(uint64_t n, uint64_t seed, Ids... ids) {
    return n == 0 ? 0 : mix(seed, uint64_t(ids)...) % n;
}

/// 32-byte seed material for deterministic actor keypairs.
inline std::array<uint8_t, 32> key_seed(uint64_t seed, uint64_t role, uint64_t id) {
    std::array<uint8_t, 32> out{};
    for (int i = 0; i < 4; ++i) {
        uint64_t w = mix(seed, role, id, uint64_t(i));
        for (int b = 0; b < 8; ++b) out[size_t(i * 8 + b)] = uint8_t(w >> (8 * b));
    }
    return out;
}

// Draw-site salts; distinct sites must never share a counter stream.
enum Salt : uint64_t {
    kSaltIngest = 1,   // witness capacity drop on an offer
    kSaltOffer = 2,    // offer delivery to a witness
    kSaltProof = 3,    // proof delivery to a witness
    kSaltCollect = 4,  // collect request delivery to a witness
    kSaltScript = 5,   // adversary scripting choices
    kSaltJitter = 6,   // optional latency jitter
};

}  // namespace molog::sim

// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sodium.h>

#include <array>
#include <span>

#include "molog/bytes.hpp"

namespace molog {

using PublicKey = std::array<uint8_t, 32>;
using Signature = std::array<uint8_t, 64>;

inline void crypto_init() {
    static const int rc = sodium_init();
    (void)rc;
}

/// Ed25519 signing identity. 64-byte detached signatures.
struct KeyPair {
    PublicKey pk{};
    std::array<uint8_t, 64> sk{};

    static KeyPair generate() {
        crypto_init();
        KeyPair kp;
        crypto_sign_keypair(kp.pk.data(), kp.sk.data());
        return kp;
    }

    /// Deterministic keypair from a 32-byte seed; the simulator derives all
    /// actor identities this way so runs replay bit-identically.
    static KeyPair from_seed(const std::array<uint8_t, 32>& seed) {
        crypto_init();
        KeyPair kp;
        crypto_sign_seed_keypair(kp.pk.data(), kp.sk.data(), seed.data());
        return kp;
    }

    Signature sign(std::span<const uint8_t> msg) const {
        Signature sig{};
        crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), sk.data());
        return sig;
    }
};

inline bool verify_signature(const PublicKey& pk, std::span<const uint8_t> msg, const Signature& sig) {
    crypto_init();
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), pk.data()) == 0;
}

}  // namespace molog

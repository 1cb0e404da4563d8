// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "molog/bytes.hpp"
#include "molog/signing.hpp"

namespace molog {

/// Signed commitment to one version of a log: (root, size, timestamp) plus
/// the log server's Ed25519 signature over those first 48 bytes.
///
/// Wire form is exactly 112 bytes: 32-byte root, 8-byte size, 8-byte
/// timestamp (both big-endian), 64-byte signature. This layout is a protocol
/// constant; witnesses group checkpoints by byte equality of the whole body.
struct Checkpoint {
    Digest root{};
    uint64_t size = 0;
    uint64_t timestamp = 0;
    Signature signature{};

    static constexpr size_t kBodyBytes = 48;
    static constexpr size_t kWireBytes = 112;

    uint64_t version() const { return size; }

    Bytes signed_body() const {
        Bytes out;
        out.reserve(kBodyBytes);
        out.insert(out.end(), root.bytes.begin(), root.bytes.end());
        put_u64be(out, size);
        put_u64be(out, timestamp);
        return out;
    }

    Bytes serialize() const {
        Bytes out = signed_body();
        out.insert(out.end(), signature.begin(), signature.end());
        return out;
    }

    static std::optional<Checkpoint> deserialize(std::span<const uint8_t> in) {
        if (in.size() != kWireBytes) return std::nullopt;
        ByteReader r(in);
        Checkpoint c;
        c.root = r.digest();
        c.size = r.u64be();
        c.timestamp = r.u64be();
        Bytes sig = r.raw(64);
        if (!r.ok()) return std::nullopt;
        std::copy(sig.begin(), sig.end(), c.signature.begin());
        return c;
    }

    std::string to_base64() const {
        Bytes b = serialize();
        return molog::to_base64(b);
    }

    static std::optional<Checkpoint> from_base64(std::string_view s) {
        Bytes raw;
        if (!from_base64_str(s, raw)) return std::nullopt;
        return deserialize(raw);
    }

    bool verify(const PublicKey& server_pk) const {
        return verify_signature(server_pk, signed_body(), signature);
    }

    bool same_body(const Checkpoint& o) const {
        return root == o.root && size == o.size && timestamp == o.timestamp &&
               signature == o.signature;
    }

  private:
    static bool from_base64_str(std::string_view s, Bytes& out) { return molog::from_base64(s, out); }
};

inline Checkpoint make_checkpoint(const Digest& root, uint64_t size, uint64_t timestamp,
                                  const KeyPair& key) {
    Checkpoint c;
    c.root = root;
    c.size = size;
    c.timestamp = timestamp;
    c.signature = key.sign(c.signed_body());
    return c;
}

}  // namespace molog

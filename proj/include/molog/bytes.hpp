// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace molog {

using Bytes = std::vector<uint8_t>;

/// 32-byte hash value. Fixed width, comparable, hashable.
struct Digest {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    const uint8_t* data() const { return bytes.data(); }
    uint8_t* data() { return bytes.data(); }
    static constexpr size_t size() { return 32; }

    /// Bit at position `i`, counting the most significant bit of byte 0 as bit 0.
    bool bit(size_t i) const { return (bytes[i / 8] >> (7 - i % 8)) & 1; }
    void set_bit(size_t i, bool v) {
        uint8_t mask = uint8_t(1u << (7 - i % 8));
        if (v) bytes[i / 8] |= mask; else bytes[i / 8] &= uint8_t(~mask);
    }
};

struct DigestHasher {
    size_t operator()(const Digest& d) const {
        size_t h;
        std::memcpy(&h, d.bytes.data(), sizeof(h));
        return h;
    }
};

inline std::string to_hex(std::span<const uint8_t> in) {
    static const char* k = "0123456789abcdef";
    std::string out;
    out.reserve(in.size() * 2);
    for (uint8_t b : in) {
        out.push_back(k[b >> 4]);
        out.push_back(k[b & 0xf]);
    }
    return out;
}

inline std::string to_hex(const Digest& d) { return to_hex(std::span(d.bytes)); }

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline bool from_hex(std::string_view s, Bytes& out) {
    if (s.size() % 2 != 0) return false;
    out.clear();
    out.reserve(s.size() / 2);
    for (size_t i = 0; i < s.size(); i += 2) {
        int hi = hex_nibble(s[i]), lo = hex_nibble(s[i + 1]);
        if (hi < 0 || lo < 0) return false;
        out.push_back(uint8_t(hi << 4 | lo));
    }
    return true;
}

inline bool digest_from_hex(std::string_view s, Digest& out) {
    Bytes raw;
    if (!from_hex(s, raw) || raw.size() != 32) return false;
    std::memcpy(out.bytes.data(), raw.data(), 32);
    return true;
}

// --- big-endian scalar encoding ------------------------------------------

inline void put_u64be(Bytes& out, uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(uint8_t(v >> (8 * i)));
}

inline void put_u32be(Bytes& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(uint8_t(v >> (8 * i)));
}

inline void put_u16be(Bytes& out, uint16_t v) {
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

/// Sequential reader over a byte span; `ok()` goes false on underrun instead
/// of throwing so parsers can fail soft on malformed input.
class ByteReader {
  public:
    explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}

    bool ok() const { return ok_; }
    size_t remaining() const { return in_.size() - pos_; }

    uint8_t u8() { return take(1) ? in_[pos_ - 1] : 0; }

    uint16_t u16be() {
        if (!take(2)) return 0;
        return uint16_t(in_[pos_ - 2]) << 8 | in_[pos_ - 1];
    }

    uint32_t u32be() {
        if (!take(4)) return 0;
        uint32_t v = 0;
        for (size_t i = pos_ - 4; i < pos_; ++i) v = v << 8 | in_[i];
        return v;
    }

    uint64_t u64be() {
        if (!take(8)) return 0;
        uint64_t v = 0;
        for (size_t i = pos_ - 8; i < pos_; ++i) v = v << 8 | in_[i];
        return v;
    }

    Digest digest() {
        Digest d;
        if (take(32)) std::memcpy(d.bytes.data(), in_.data() + pos_ - 32, 32);
        return d;
    }

    Bytes raw(size_t n) {
        if (!take(n)) return {};
        return Bytes(in_.begin() + long(pos_ - n), in_.begin() + long(pos_));
    }

  private:
    bool take(size_t n) {
        if (!ok_ || pos_ + n > in_.size()) { ok_ = false; return false; }
        pos_ += n;
        return true;
    }

    std::span<const uint8_t> in_;
    size_t pos_ = 0;
    bool ok_ = true;
};

// --- base64 (standard alphabet, padded) ----------------------------------

inline std::string to_base64(std::span<const uint8_t> in) {
    static const char* k = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= in.size(); i += 3) {
        uint32_t v = in[i] << 16 | in[i + 1] << 8 | in[i + 2];
        out.push_back(k[v >> 18 & 63]);
        out.push_back(k[v >> 12 & 63]);
        out.push_back(k[v >> 6 & 63]);
        out.push_back(k[v & 63]);
    }
    if (i + 1 == in.size()) {
        uint32_t v = in[i] << 16;
        out.push_back(k[v >> 18 & 63]);
        out.push_back(k[v >> 12 & 63]);
        out += "==";
    } else if (i + 2 == in.size()) {
        uint32_t v = in[i] << 16 | in[i + 1] << 8;
        out.push_back(k[v >> 18 & 63]);
        out.push_back(k[v >> 12 & 63]);
        out.push_back(k[v >> 6 & 63]);
        out.push_back('=');
    }
    return out;
}

inline bool from_base64(std::string_view s, Bytes& out) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    out.clear();
    uint32_t acc = 0;
    int bits = 0;
    size_t pad = 0;
    for (char c : s) {
        if (c == '\n' || c == '\r' || c == ' ') continue;
        if (c == '=') { pad++; continue; }
        if (pad) return false;
        int v = val(c);
        if (v < 0) return false;
        acc = acc << 6 | uint32_t(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(uint8_t(acc >> bits));
        }
    }
    return pad <= 2;
}

inline Bytes str_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace molog

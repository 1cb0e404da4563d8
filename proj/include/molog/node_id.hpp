// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>

#include "molog/bytes.hpp"

namespace molog {

/// Address of a perfect subtree: node (height, index) covers leaves
/// [index * 2^height, (index + 1) * 2^height).
struct NodeId {
    uint64_t height = 0;
    uint64_t index = 0;

    auto operator<=>(const NodeId&) const = default;

    uint64_t cover_lo() const { return index << height; }
    uint64_t cover_hi() const { return (index + 1) << height; }
    uint64_t cover_size() const { return uint64_t(1) << height; }

    NodeId parent() const { return {height + 1, index / 2}; }
    NodeId left_child() const { return {height - 1, 2 * index}; }
    NodeId right_child() const { return {height - 1, 2 * index + 1}; }
    bool is_left_child() const { return index % 2 == 0; }

    /// Two nodes are siblings iff they share a parent and differ in index.
    bool sibling_of(const NodeId& o) const {
        return height == o.height && (index ^ o.index) == 1;
    }

    // Serialized as two unsigned 64-bit big-endian integers.
    void encode(Bytes& out) const {
        put_u64be(out, height);
        put_u64be(out, index);
    }

    static NodeId decode(ByteReader& r) {
        NodeId n;
        n.height = r.u64be();
        n.index = r.u64be();
        return n;
    }
};

}  // namespace molog

// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <functional>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <vector>

#include "molog/bytes.hpp"
#include "molog/errors.hpp"
#include "molog/hashing.hpp"
#include "molog/node_id.hpp"

namespace molog {

/// The minimal set of perfect-subtree nodes exactly covering the leaf
/// interval [lo, hi) of a history tree, listed left to right together with
/// their digests. Carries its own endpoints so proofs are structurally
/// checkable before any hashing.
struct CompactRange {
    uint64_t lo = 0;
    uint64_t hi = 0;
    std::vector<std::pair<NodeId, Digest>> nodes;

    bool empty() const { return lo == hi; }
    size_t size() const { return nodes.size(); }

    bool operator==(const CompactRange&) const = default;

    /// Structural sanity: contiguous left-to-right perfect coverage of
    /// [lo, hi) with no two adjacent siblings.
    bool well_formed() const {
        if (lo > hi) return false;
        if (lo == hi) return nodes.empty();
        uint64_t at = lo;
        for (size_t i = 0; i < nodes.size(); ++i) {
            const NodeId& n = nodes[i].first;
            if (n.cover_lo() != at) return false;
            at = n.cover_hi();
            if (i > 0 && nodes[i - 1].first.sibling_of(n)) return false;
        }
        return at == hi;
    }

    void encode(Bytes& out) const {
        put_u16be(out, uint16_t(nodes.size()));
        for (const auto& [id, d] : nodes) {
            out.push_back(uint8_t(id.height));
            put_u64be(out, id.index);
            out.insert(out.end(), d.bytes.begin(), d.bytes.end());
        }
    }

    /// Decodes the node list; lo/hi are reconstructed from the node covers.
    /// Returns nullopt on truncation or a gap in coverage.
    static std::optional<CompactRange> decode(ByteReader& r) {
        CompactRange c;
        uint16_t count = r.u16be();
        for (uint16_t i = 0; i < count; ++i) {
            NodeId id;
            id.height = r.u8();
            id.index = r.u64be();
            Digest d = r.digest();
            if (!r.ok()) return std::nullopt;
            c.nodes.emplace_back(id, d);
        }
        if (!r.ok()) return std::nullopt;
        if (!c.nodes.empty()) {
            c.lo = c.nodes.front().first.cover_lo();
            c.hi = c.nodes.back().first.cover_hi();
        }
        if (!c.well_formed()) return std::nullopt;
        return c;
    }

    std::string to_text() const {
        std::ostringstream os;
        for (const auto& [id, d] : nodes)
            os << id.height << " " << id.index << " " << to_hex(d) << "\n";
        return os.str();
    }
};

/// Supplies the digest of any perfect subtree node. Backed by a real tree in
/// production; tests may back it with the mth oracle.
using NodeDigestFn = std::function<Digest(const NodeId&)>;

/// Greedy minimal decomposition of [lo, hi) within a tree of size n.
/// Equivalent to the recursive root-down construction: ascend from the leaf
/// level, peeling a maximal node off whichever edge is unaligned. Nodes come
/// out in left-to-right order with at most two per height.
inline CompactRange compute_range(uint64_t n, uint64_t lo, uint64_t hi, const NodeDigestFn& digest_of) {
    if (lo > hi || hi > n) throw Error(Errc::RangeOutOfBounds, "compute_range");
    CompactRange out;
    out.lo = lo;
    out.hi = hi;
    if (lo == hi) return out;

    std::vector<std::pair<NodeId, Digest>> left, right;
    uint64_t l = lo, r = hi, h = 0;
    while (l < r) {
        if (l & 1) {
            NodeId id{h, l};
            left.emplace_back(id, digest_of(id));
            ++l;
        }
        if (r & 1) {
            --r;
            NodeId id{h, r};
            right.emplace_back(id, digest_of(id));
        }
        l >>= 1;
        r >>= 1;
        ++h;
        if (l == r) break;
    }
    out.nodes = std::move(left);
    out.nodes.insert(out.nodes.end(), right.rbegin(), right.rend());
    return out;
}

namespace detail {

/// Collapse every adjacent sibling pair, lowest height first, hashing the
/// pair into its parent. The scan restarts from the lowest height each time
/// a parent is formed, since the parent may itself have a sibling present.
inline void collapse_siblings(std::vector<std::pair<NodeId, Digest>>& nodes) {
    bool changed = true;
    while (changed) {
        changed = false;
        size_t best = nodes.size();
        for (size_t i = 0; i + 1 < nodes.size(); ++i) {
            if (nodes[i].first.sibling_of(nodes[i + 1].first) && nodes[i].first.is_left_child()) {
                if (best == nodes.size() || nodes[i].first.height < nodes[best].first.height)
                    best = i;
            }
        }
        if (best < nodes.size()) {
            NodeId parent = nodes[best].first.parent();
            Digest d = node_hash(nodes[best].second, nodes[best + 1].second);
            nodes[best] = {parent, d};
            nodes.erase(nodes.begin() + long(best) + 1);
            changed = true;
        }
    }
}

}  // namespace detail

/// Merge adjacent compact ranges into the compact range of their union.
/// Inputs must tile a contiguous interval in order; anything else is a
/// contract violation.
inline CompactRange merge(std::span<const CompactRange> ranges) {
    std::vector<const CompactRange*> live;
    for (const auto& r : ranges)
        if (!r.empty()) live.push_back(&r);
    if (live.empty()) {
        CompactRange out;
        if (!ranges.empty()) { out.lo = ranges.front().lo; out.hi = ranges.front().lo; }
        return out;
    }
    CompactRange out;
    out.lo = live.front()->lo;
    for (size_t i = 0; i < live.size(); ++i) {
        if (i > 0 && live[i]->lo != live[i - 1]->hi)
            throw Error(Errc::NonContiguousRanges, "merge");
        out.nodes.insert(out.nodes.end(), live[i]->nodes.begin(), live[i]->nodes.end());
    }
    out.hi = live.back()->hi;
    detail::collapse_siblings(out.nodes);
    return out;
}

inline CompactRange merge(std::initializer_list<CompactRange> ranges) {
    std::vector<CompactRange> v(ranges);
    return merge(std::span<const CompactRange>(v));
}

/// A single leaf [i, i+1) as a compact range, given its leaf digest.
inline CompactRange leaf_range(uint64_t index, const Digest& leaf_digest) {
    CompactRange c;
    c.lo = index;
    c.hi = index + 1;
    c.nodes.emplace_back(NodeId{0, index}, leaf_digest);
    return c;
}

/// Root of the history tree of size hi from the compact range of [0, hi).
/// Prefix ranges hold at most one node per height, in strictly descending
/// height order, so the sorted-stack discipline reduces to a right-to-left
/// fold.
inline Digest range_to_root(const CompactRange& range) {
    if (range.lo != 0) throw Error(Errc::NotPrefixRange, "range_to_root");
    if (range.empty() || range.nodes.empty()) throw Error(Errc::EmptyRange, "range_to_root");
    Digest acc = range.nodes.back().second;
    for (size_t i = range.nodes.size() - 1; i-- > 0;)
        acc = node_hash(range.nodes[i].second, acc);
    return acc;
}

/// Inclusion proof for one leaf: the compact ranges flanking it.
struct RangeInclusionProof {
    CompactRange left;   // compact([0, i))
    CompactRange right;  // compact([i+1, n))

    void encode(Bytes& out) const {
        left.encode(out);
        right.encode(out);
    }

    static std::optional<RangeInclusionProof> decode(ByteReader& r) {
        auto l = CompactRange::decode(r);
        auto rr = CompactRange::decode(r);
        if (!l || !rr) return std::nullopt;
        return RangeInclusionProof{std::move(*l), std::move(*rr)};
    }
};

/// The wire form carries only nodes, so an empty range has no endpoints of
/// its own; verifiers pin it to the interval the proof claims for it.
inline std::optional<CompactRange> pin_range(const CompactRange& r, uint64_t lo, uint64_t hi) {
    if (!r.well_formed()) return std::nullopt;
    if (r.empty()) {
        if (lo != hi) return std::nullopt;
        CompactRange out;
        out.lo = out.hi = lo;
        return out;
    }
    if (r.lo != lo || r.hi != hi) return std::nullopt;
    return r;
}

/// Accepts iff merging left ‖ leaf ‖ right reproduces the committed root.
/// `leaf_digest` is the leaf hash of the claimed entry at `leaf_index`.
inline Verdict verify_inclusion(const Digest& root, uint64_t tree_size, const Digest& leaf_digest,
                                uint64_t leaf_index, const RangeInclusionProof& proof) {
    if (leaf_index >= tree_size) return Verdict::reject("MalformedProof: index out of range");
    auto left = pin_range(proof.left, 0, leaf_index);
    auto right = pin_range(proof.right, leaf_index + 1, tree_size);
    if (!left) return Verdict::reject("MalformedProof: left range endpoints");
    if (!right) return Verdict::reject("MalformedProof: right range endpoints");
    CompactRange merged = merge({*left, leaf_range(leaf_index, leaf_digest), *right});
    if (range_to_root(merged) != root) return Verdict::reject("RootMismatch");
    return Verdict::accept();
}

/// Multi-leaf variant: consecutive leaf digests occupying [first_index,
/// first_index + |leaves|). Same acceptance rule with a widened middle.
inline Verdict verify_inclusion_run(const Digest& root, uint64_t tree_size,
                                    std::span<const Digest> leaves, uint64_t first_index,
                                    const RangeInclusionProof& proof) {
    if (leaves.empty()) return Verdict::reject("MalformedProof: empty leaf run");
    uint64_t end = first_index + leaves.size();
    if (end > tree_size) return Verdict::reject("MalformedProof: run out of range");
    auto left = pin_range(proof.left, 0, first_index);
    auto right = pin_range(proof.right, end, tree_size);
    if (!left) return Verdict::reject("MalformedProof: left range endpoints");
    if (!right) return Verdict::reject("MalformedProof: right range endpoints");
    std::vector<CompactRange> parts;
    parts.push_back(*left);
    for (size_t i = 0; i < leaves.size(); ++i)
        parts.push_back(leaf_range(first_index + i, leaves[i]));
    parts.push_back(*right);
    CompactRange merged = merge(std::span<const CompactRange>(parts));
    if (range_to_root(merged) != root) return Verdict::reject("RootMismatch");
    return Verdict::accept();
}

/// Consistency proof between two sizes: compact([0, old)) and
/// compact([old, new)).
struct RangeConsistencyProof {
    CompactRange prefix;  // compact([0, old_size))
    CompactRange delta;   // compact([old_size, new_size))

    void encode(Bytes& out) const {
        prefix.encode(out);
        delta.encode(out);
    }

    static std::optional<RangeConsistencyProof> decode(ByteReader& r) {
        auto p = CompactRange::decode(r);
        auto d = CompactRange::decode(r);
        if (!p || !d) return std::nullopt;
        return RangeConsistencyProof{std::move(*p), std::move(*d)};
    }
};

/// Accepts iff the prefix range reproduces the old root and prefix+delta
/// reproduce the new one. old_size == 0 skips the old-root check: an empty
/// log commits to nothing.
inline Verdict verify_consistency(const Digest& old_root, uint64_t old_size, const Digest& new_root,
                                  uint64_t new_size, const RangeConsistencyProof& proof) {
    if (new_size < old_size) return Verdict::reject("ShrinkingLog");
    auto prefix = pin_range(proof.prefix, 0, old_size);
    auto delta = pin_range(proof.delta, old_size, new_size);
    if (!prefix) return Verdict::reject("MalformedProof: prefix endpoints");
    if (!delta) return Verdict::reject("MalformedProof: delta endpoints");
    if (old_size > 0 && range_to_root(*prefix) != old_root)
        return Verdict::reject("OldRootMismatch");
    if (new_size == 0) {
        // Two empty logs: nothing to hash, roots must already agree.
        return old_root == new_root ? Verdict::accept() : Verdict::reject("NewRootMismatch");
    }
    CompactRange merged = merge({*prefix, *delta});
    if (range_to_root(merged) != new_root) return Verdict::reject("NewRootMismatch");
    return Verdict::accept();
}

/// Extends a stored prefix range by a delta produced by the log server.
/// merge() enforces adjacency; this wrapper just states intent for callers
/// that keep a frontier cached across checkpoint updates.
inline CompactRange incremental_update(const CompactRange& stored, const CompactRange& delta) {
    if (stored.lo != 0) throw Error(Errc::NotPrefixRange, "incremental_update");
    if (delta.lo != stored.hi) throw Error(Errc::NonContiguousRanges, "incremental_update");
    return merge({stored, delta});
}

}  // namespace molog

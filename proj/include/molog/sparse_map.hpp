// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <future>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "molog/bytes.hpp"
#include "molog/errors.hpp"
#include "molog/hashing.hpp"

namespace molog {

/// 256-bit map path: SHA-256 of the application key, consumed MSB-first
/// from the root.
using MapKey = Digest;

inline MapKey map_key(std::span<const uint8_t> app_key) { return sha256(app_key); }
inline MapKey map_key(const Bytes& app_key) { return sha256(std::span<const uint8_t>(app_key)); }

/// Digests of all-default subtrees by height. default_hash(0) is the
/// default leaf; every parent of two defaults is itself default.
class DefaultHashes {
  public:
    static const DefaultHashes& instance() {
        static DefaultHashes d;
        return d;
    }

    const Digest& at(size_t height) const {
        if (height > 256) throw Error(Errc::HeightOutOfRange, "default_hash");
        return table_[height];
    }

  private:
    DefaultHashes() {
        table_[0] = leaf_hash(std::span<const uint8_t>());
        for (size_t h = 1; h <= 256; ++h) table_[h] = node_hash(table_[h - 1], table_[h - 1]);
    }

    std::array<Digest, 257> table_;
};

inline const Digest& default_hash(size_t height) { return DefaultHashes::instance().at(height); }

/// Inclusion (or non-inclusion) proof: up to 256 sibling digests bottom-up,
/// with bit k of the presence bitmap marking a non-default sibling at height
/// k. Omitted siblings are exactly the default digest for their height.
struct MapInclusionProof {
    std::array<uint8_t, 32> bitmap{};
    std::vector<Digest> siblings;  // non-default only, bottom-up

    bool bit(size_t height) const { return (bitmap[height / 8] >> (7 - height % 8)) & 1; }
    void set_bit(size_t height) { bitmap[height / 8] |= uint8_t(1u << (7 - height % 8)); }

    size_t popcount() const {
        size_t n = 0;
        for (uint8_t b : bitmap) n += size_t(std::popcount(b));
        return n;
    }

    /// Expands to the full 256-entry sibling vector, defaults included.
    std::vector<Digest> expand() const {
        std::vector<Digest> full(256);
        size_t next = 0;
        for (size_t h = 0; h < 256; ++h)
            full[h] = bit(h) ? siblings[next++] : default_hash(h);
        return full;
    }

    static MapInclusionProof compress(std::span<const Digest> full) {
        MapInclusionProof p;
        for (size_t h = 0; h < 256; ++h) {
            if (full[h] != default_hash(h)) {
                p.set_bit(h);
                p.siblings.push_back(full[h]);
            }
        }
        return p;
    }

    void encode(Bytes& out) const {
        out.insert(out.end(), bitmap.begin(), bitmap.end());
        for (const Digest& d : siblings) out.insert(out.end(), d.bytes.begin(), d.bytes.end());
    }

    static std::optional<MapInclusionProof> decode(ByteReader& r) {
        MapInclusionProof p;
        Bytes bm = r.raw(32);
        if (!r.ok()) return std::nullopt;
        std::copy(bm.begin(), bm.end(), p.bitmap.begin());
        size_t n = p.popcount();
        for (size_t i = 0; i < n; ++i) p.siblings.push_back(r.digest());
        if (!r.ok()) return std::nullopt;
        return p;
    }

    bool operator==(const MapInclusionProof&) const = default;
};

/// Folds a leaf digest up 256 levels against the proof's siblings and
/// accepts iff the result is the claimed root. Absent keys verify with the
/// default leaf digest.
inline Verdict map_verify_inclusion(const Digest& root, const MapKey& key, const Digest& value,
                                    const MapInclusionProof& proof) {
    if (proof.popcount() != proof.siblings.size())
        return Verdict::reject("MalformedProof: bitmap/sibling count mismatch");
    Digest cur = value;
    size_t next = 0;
    for (size_t h = 0; h < 256; ++h) {
        const Digest& sib = proof.bit(h) ? proof.siblings[next++] : default_hash(h);
        // Fold at height h branches on path bit 255-h (MSB-first from root).
        if (key.bit(255 - h))
            cur = node_hash(sib, cur);
        else
            cur = node_hash(cur, sib);
    }
    if (cur != root) return Verdict::reject("RootMismatch");
    return Verdict::accept();
}

namespace smt {

/// Immutable trie node. A Leaf standing at depth d represents the whole
/// subtree of height 256-d that contains exactly its key; empty subtrees are
/// null pointers and hash to the default for their height. Digests are
/// computed once at construction (for a Leaf that is the fold through
/// defaults down its unique tail), so snapshots share both structure and
/// hash work.
struct Node {
    // leaf fields; branch iff left||right set
    MapKey key{};
    Digest value{};
    std::shared_ptr<const Node> left, right;
    Digest digest{};
    bool is_leaf = true;

    static std::shared_ptr<const Node> make_leaf(const MapKey& k, const Digest& v, size_t depth) {
        auto n = std::make_shared<Node>();
        n->key = k;
        n->value = v;
        n->is_leaf = true;
        Digest cur = v;
        for (size_t h = 0; h + depth < 256; ++h) {
            const Digest& dh = default_hash(h);
            cur = k.bit(255 - h) ? node_hash(dh, cur) : node_hash(cur, dh);
        }
        n->digest = cur;
        return n;
    }

    static std::shared_ptr<const Node> make_branch(std::shared_ptr<const Node> l,
                                                   std::shared_ptr<const Node> r, size_t depth) {
        auto n = std::make_shared<Node>();
        n->is_leaf = false;
        n->left = std::move(l);
        n->right = std::move(r);
        size_t child_height = 255 - depth;
        const Digest& dl = n->left ? n->left->digest : default_hash(child_height);
        const Digest& dr = n->right ? n->right->digest : default_hash(child_height);
        n->digest = node_hash(dl, dr);
        return n;
    }
};

using NodePtr = std::shared_ptr<const Node>;

struct Update {
    MapKey key;
    Digest value;
};

/// Rebuilds the subtree at `depth` from `old_node` plus sorted updates.
/// Touched paths are copied; untouched subtrees are shared with the previous
/// version.
inline NodePtr apply_updates(const NodePtr& old_node, size_t depth, std::span<const Update> ups) {
    if (ups.empty()) return old_node;
    if (ups.size() == 1 && (!old_node || (old_node->is_leaf && old_node->key == ups[0].key)))
        return Node::make_leaf(ups[0].key, ups[0].value, depth);
    if (depth == 256) {
        // Single key position; the (unique) update overwrites.
        return Node::make_leaf(ups[0].key, ups[0].value, depth);
    }

    // An existing leaf deeper than this point re-enters as a pseudo-update
    // unless one of the real updates overwrites it.
    std::vector<Update> merged;
    std::span<const Update> work = ups;
    if (old_node && old_node->is_leaf) {
        bool overwritten = std::any_of(ups.begin(), ups.end(),
                                       [&](const Update& u) { return u.key == old_node->key; });
        if (!overwritten) {
            merged.assign(ups.begin(), ups.end());
            merged.push_back({old_node->key, old_node->value});
            std::sort(merged.begin(), merged.end(),
                      [](const Update& a, const Update& b) { return a.key < b.key; });
            work = merged;
        }
        if (work.size() == 1) return Node::make_leaf(work[0].key, work[0].value, depth);
    }

    auto mid = std::partition_point(work.begin(), work.end(),
                                    [&](const Update& u) { return !u.key.bit(depth); });
    std::span<const Update> lo(work.begin(), mid);
    std::span<const Update> hi(mid, work.end());

    NodePtr old_l, old_r;
    if (old_node && !old_node->is_leaf) {
        old_l = old_node->left;
        old_r = old_node->right;
    }

    // Every subtree of the map is itself a map, so large batches split by
    // the current key bit and the two halves hash independently. The result
    // is positional, so scheduling cannot affect the root.
    if (depth < 3 && lo.size() >= 512 && hi.size() >= 512) {
        auto fut = std::async(std::launch::async,
                              [&] { return apply_updates(old_l, depth + 1, lo); });
        NodePtr nr = apply_updates(old_r, depth + 1, hi);
        return Node::make_branch(fut.get(), std::move(nr), depth);
    }
    NodePtr nl = apply_updates(old_l, depth + 1, lo);
    NodePtr nr = apply_updates(old_r, depth + 1, hi);
    return Node::make_branch(std::move(nl), std::move(nr), depth);
}

}  // namespace smt

/// Sparse Merkle tree over the 2^256 keyspace. Immutable value type: updates
/// produce a new map sharing structure with the old one, so every version
/// stays usable as a snapshot for proof generation.
class SparseMap {
  public:
    SparseMap() = default;

    Digest root() const { return root_ ? root_->digest : default_hash(256); }
    uint64_t population() const { return population_; }

    /// Applies a batch of distinct-key updates. Result depends only on the
    /// (previous map, batch) pair, not on batch order.
    SparseMap batch_update(std::span<const std::pair<MapKey, Digest>> updates) const {
        std::vector<smt::Update> ups;
        ups.reserve(updates.size());
        for (const auto& [k, v] : updates) ups.push_back({k, v});
        std::sort(ups.begin(), ups.end(),
                  [](const smt::Update& a, const smt::Update& b) { return a.key < b.key; });
        for (size_t i = 0; i + 1 < ups.size(); ++i)
            if (ups[i].key == ups[i + 1].key) throw Error(Errc::DuplicateKey, "batch_update");

        uint64_t fresh = 0;
        for (const auto& u : ups)
            if (!lookup(u.key)) ++fresh;

        SparseMap out;
        out.root_ = smt::apply_updates(root_, 0, ups);
        out.population_ = population_ + fresh;
        return out;
    }

    SparseMap update_one(const MapKey& k, const Digest& v) const {
        std::pair<MapKey, Digest> u{k, v};
        return batch_update(std::span(&u, 1));
    }

    /// Stored value digest, or nullopt for unpopulated keys.
    std::optional<Digest> lookup(const MapKey& key) const {
        const smt::Node* n = root_.get();
        size_t depth = 0;
        while (n) {
            if (n->is_leaf) return n->key == key ? std::optional<Digest>(n->value) : std::nullopt;
            n = key.bit(depth) ? n->right.get() : n->left.get();
            ++depth;
        }
        return std::nullopt;
    }

    /// Value the map commits to for this key: the stored digest, or the
    /// default leaf for absent keys.
    Digest committed_value(const MapKey& key) const {
        auto v = lookup(key);
        return v ? *v : default_hash(0);
    }

    /// Sibling digests along the key's path, bitmap-compressed. Works for
    /// absent keys too (non-inclusion proof of the default leaf).
    MapInclusionProof prove_inclusion(const MapKey& key) const {
        std::vector<Digest> top_down;  // sibling at depth d has height 255-d
        top_down.reserve(64);
        const smt::Node* n = root_.get();
        size_t depth = 0;
        while (n && !n->is_leaf) {
            bool go_right = key.bit(depth);
            const smt::Node* child = go_right ? n->right.get() : n->left.get();
            const smt::Node* other = go_right ? n->left.get() : n->right.get();
            top_down.push_back(other ? other->digest : default_hash(255 - depth));
            n = child;
            ++depth;
        }
        std::vector<Digest> full(256);
        for (size_t h = 0; h < 256; ++h) full[h] = default_hash(h);
        for (size_t d = 0; d < top_down.size(); ++d) full[255 - d] = top_down[d];

        if (n && n->key != key) {
            // Shared tail with the resident leaf until the first differing
            // bit; the leaf's own subtree shows up as the sibling there.
            size_t d = depth;
            while (d < 256 && key.bit(d) == n->key.bit(d)) ++d;
            Digest cur = n->value;
            for (size_t h = 0; h + d + 1 < 256; ++h) {
                const Digest& dh = default_hash(h);
                cur = n->key.bit(255 - h) ? node_hash(dh, cur) : node_hash(cur, dh);
            }
            full[255 - d] = cur;
        }
        return MapInclusionProof::compress(full);
    }

  private:
    smt::NodePtr root_;
    uint64_t population_ = 0;
};

/// Delta between two inclusion proofs for the same key at consecutive map
/// versions: which sibling heights changed, the new presence bitmap, and the
/// digests for changed positions that are non-default in the new proof.
struct MapProofDelta {
    std::array<uint8_t, 32> changed{};
    std::array<uint8_t, 32> presence{};
    std::vector<Digest> digests;

    static bool get(const std::array<uint8_t, 32>& bm, size_t h) {
        return (bm[h / 8] >> (7 - h % 8)) & 1;
    }
    static void set(std::array<uint8_t, 32>& bm, size_t h) {
        bm[h / 8] |= uint8_t(1u << (7 - h % 8));
    }

    size_t changed_count() const {
        size_t n = 0;
        for (uint8_t b : changed) n += size_t(std::popcount(b));
        return n;
    }

    /// Deepest changed sibling expressed as trials-from-root: a change at
    /// sibling height h sits at depth 256-h along the path.
    std::optional<size_t> deepest_change_depth() const {
        for (size_t h = 0; h < 256; ++h)
            if (get(changed, h)) return 256 - h;
        return std::nullopt;
    }

    static MapProofDelta diff(const MapInclusionProof& prev, const MapInclusionProof& next) {
        MapProofDelta d;
        d.presence = next.bitmap;
        auto pf = prev.expand();
        auto nf = next.expand();
        for (size_t h = 0; h < 256; ++h) {
            if (pf[h] != nf[h]) {
                set(d.changed, h);
                if (next.bit(h)) d.digests.push_back(nf[h]);
            }
        }
        return d;
    }

    /// Reconstructs the next full proof from the previous one. Returns
    /// nullopt if the digest count is inconsistent with the bitmaps.
    std::optional<MapInclusionProof> apply(const MapInclusionProof& prev) const {
        auto full = prev.expand();
        size_t next_digest = 0;
        for (size_t h = 0; h < 256; ++h) {
            if (!get(changed, h)) continue;
            if (get(presence, h)) {
                if (next_digest >= digests.size()) return std::nullopt;
                full[h] = digests[next_digest++];
            } else {
                full[h] = default_hash(h);
            }
        }
        if (next_digest != digests.size()) return std::nullopt;
        MapInclusionProof out = MapInclusionProof::compress(full);
        if (out.bitmap != presence) return std::nullopt;
        return out;
    }

    void encode(Bytes& out) const {
        out.insert(out.end(), changed.begin(), changed.end());
        out.insert(out.end(), presence.begin(), presence.end());
        for (const Digest& d : digests) out.insert(out.end(), d.bytes.begin(), d.bytes.end());
    }

    static std::optional<MapProofDelta> decode(ByteReader& r) {
        MapProofDelta d;
        Bytes c = r.raw(32), p = r.raw(32);
        if (!r.ok()) return std::nullopt;
        std::copy(c.begin(), c.end(), d.changed.begin());
        std::copy(p.begin(), p.end(), d.presence.begin());
        size_t n = 0;
        for (size_t h = 0; h < 256; ++h)
            if (get(d.changed, h) && get(d.presence, h)) ++n;
        for (size_t i = 0; i < n; ++i) d.digests.push_back(r.digest());
        if (!r.ok()) return std::nullopt;
        return d;
    }

    bool operator==(const MapProofDelta&) const = default;
};

}  // namespace molog

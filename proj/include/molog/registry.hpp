// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "molog/checkpoint.hpp"
#include "molog/compact_range.hpp"
#include "molog/hashing.hpp"
#include "molog/log.hpp"
#include "molog/sparse_map.hpp"

namespace molog {

// A verifiable registry is a map of logs. Every key owns an append-only
// leaf log of value hashes; the sparse map commits each key to its leaf
// log's (root, size); every map root is appended to the map-root log (MRL),
// whose checkpoints are what clients gossip about.

/// Map leaf committing a key to the state of its leaf log. Binding the size
/// prevents a prefix root from standing in for a longer log.
inline Digest map_leaf_value(const Digest& leaflog_root, uint64_t leaflog_size) {
    Bytes payload(leaflog_root.bytes.begin(), leaflog_root.bytes.end());
    put_u64be(payload, leaflog_size);
    return leaf_hash(payload);
}

/// What the map holds for a key with this leaf-log state. A key with no
/// history is simply absent: its leaf is the default, so empty histories
/// verify as non-inclusion.
inline Digest committed_map_value(const Digest& leaflog_root, uint64_t leaflog_size) {
    return leaflog_size == 0 ? default_hash(0) : map_leaf_value(leaflog_root, leaflog_size);
}

/// MRL entries are the raw 32-byte map roots.
inline Entry mrl_entry(const Digest& map_root) {
    return Entry(map_root.bytes.begin(), map_root.bytes.end());
}

/// Leaf-log entries are the 32-byte hashes of the stored values.
inline Entry leaflog_entry(const Bytes& value) {
    Digest h = sha256(std::span<const uint8_t>(value));
    return Entry(h.bytes.begin(), h.bytes.end());
}

/// Client-retained summary of one key's verified history: the checkpoint it
/// was verified against plus the cached frontier ranges needed to extend
/// both the MRL and the leaf log incrementally on the next update.
struct HistRep {
    Checkpoint checkpoint{};       // MRL checkpoint (version = checkpoint.size)
    CompactRange mrl_frontier{};   // compact([0, version))
    CompactRange leaf_frontier{};  // compact([0, leaflog_size))

    uint64_t version() const { return checkpoint.size; }
    uint64_t leaflog_size() const { return leaf_frontier.hi; }

    Digest leaflog_root() const {
        return leaf_frontier.empty() ? empty_root() : range_to_root(leaf_frontier);
    }

    void encode(Bytes& out) const {
        Bytes cp = checkpoint.serialize();
        out.insert(out.end(), cp.begin(), cp.end());
        mrl_frontier.encode(out);
        leaf_frontier.encode(out);
    }

    static std::optional<HistRep> decode(ByteReader& r) {
        HistRep h;
        Bytes cp = r.raw(Checkpoint::kWireBytes);
        if (!r.ok()) return std::nullopt;
        auto c = Checkpoint::deserialize(cp);
        if (!c) return std::nullopt;
        h.checkpoint = *c;
        auto mf = CompactRange::decode(r);
        auto lf = CompactRange::decode(r);
        if (!mf || !lf) return std::nullopt;
        h.mrl_frontier = *mf;
        h.leaf_frontier = *lf;
        return h;
    }
};

/// Latest-value proof: leaf-log inclusion of H(val) as the rightmost leaf,
/// map inclusion of the leaf-log commitment, MRL inclusion of the map root
/// as the rightmost MRL leaf. The empty right-hand ranges are what make
/// "latest" verifiable.
struct LookupProof {
    uint64_t leaflog_size = 0;
    RangeInclusionProof pi_leaflog;  // absent key: ignored (leaflog_size 0)
    MapInclusionProof pi_map;
    RangeInclusionProof pi_mrl;

    void encode(Bytes& out) const {
        put_u64be(out, leaflog_size);
        pi_leaflog.encode(out);
        pi_map.encode(out);
        pi_mrl.encode(out);
    }

    static std::optional<LookupProof> decode(ByteReader& r) {
        LookupProof p;
        p.leaflog_size = r.u64be();
        auto a = RangeInclusionProof::decode(r);
        auto b = MapInclusionProof::decode(r);
        auto c = RangeInclusionProof::decode(r);
        if (!a || !b || !c) return std::nullopt;
        p.pi_leaflog = *a;
        p.pi_map = *b;
        p.pi_mrl = *c;
        return p;
    }
};

/// History-update proof. The client recomputes the leaf-log root itself from
/// the returned entries, so no leaf-log inclusion proof is carried. The MRL
/// delta range lets the client roll its cached MRL frontier forward to the
/// new checkpoint.
struct HistProof {
    MapInclusionProof pi_map;
    RangeInclusionProof pi_mrl;
    CompactRange mrl_delta;  // compact([old_version, new_version))

    void encode(Bytes& out) const {
        pi_map.encode(out);
        pi_mrl.encode(out);
        mrl_delta.encode(out);
    }

    static std::optional<HistProof> decode(ByteReader& r) {
        HistProof p;
        auto a = MapInclusionProof::decode(r);
        auto b = RangeInclusionProof::decode(r);
        auto c = CompactRange::decode(r);
        if (!a || !b || !c) return std::nullopt;
        p.pi_map = *a;
        p.pi_mrl = *b;
        p.mrl_delta = *c;
        return p;
    }
};

/// Witness-providing proof that the key's leaf log sat unchanged in a run of
/// intermediate map versions. Carries the intermediate map roots (the
/// verifier folds them into its MRL frontier, so no MRL inclusion proof is
/// needed) and per-version map proofs, delta-compressed against the previous
/// version's proof. `base` carries the first proof in full when there is no
/// preceding proof to delta against.
struct BetweenPart {
    std::vector<Digest> roots;  // map roots of the covered versions, in order
    std::optional<MapInclusionProof> base;
    std::vector<MapProofDelta> deltas;

    void encode(Bytes& out) const {
        put_u32be(out, uint32_t(roots.size()));
        for (const Digest& d : roots) out.insert(out.end(), d.bytes.begin(), d.bytes.end());
        out.push_back(base ? 1 : 0);
        if (base) base->encode(out);
        put_u32be(out, uint32_t(deltas.size()));
        for (const auto& d : deltas) d.encode(out);
    }

    static std::optional<BetweenPart> decode(ByteReader& r) {
        BetweenPart b;
        uint32_t n = r.u32be();
        for (uint32_t i = 0; i < n; ++i) b.roots.push_back(r.digest());
        uint8_t has_base = r.u8();
        if (!r.ok()) return std::nullopt;
        if (has_base) {
            auto m = MapInclusionProof::decode(r);
            if (!m) return std::nullopt;
            b.base = *m;
        }
        uint32_t nd = r.u32be();
        for (uint32_t i = 0; i < nd; ++i) {
            auto d = MapProofDelta::decode(r);
            if (!d) return std::nullopt;
            b.deltas.push_back(*d);
        }
        if (!r.ok()) return std::nullopt;
        return b;
    }
};

/// One appended value inside an audit: the value, the hist proof anchored at
/// the checkpoint of the version that introduced it, and the between part
/// covering the unchanged versions that follow it.
struct AuditStep {
    Bytes value;
    Checkpoint checkpoint;  // version at which the value was appended
    HistProof hist;
    BetweenPart btwn;

    void encode(Bytes& out) const {
        put_u32be(out, uint32_t(value.size()));
        out.insert(out.end(), value.begin(), value.end());
        Bytes cp = checkpoint.serialize();
        out.insert(out.end(), cp.begin(), cp.end());
        hist.encode(out);
        btwn.encode(out);
    }

    static std::optional<AuditStep> decode(ByteReader& r) {
        AuditStep s;
        uint32_t n = r.u32be();
        s.value = r.raw(n);
        Bytes cp = r.raw(Checkpoint::kWireBytes);
        if (!r.ok()) return std::nullopt;
        auto c = Checkpoint::deserialize(cp);
        if (!c) return std::nullopt;
        s.checkpoint = *c;
        auto h = HistProof::decode(r);
        auto b = BetweenPart::decode(r);
        if (!h || !b) return std::nullopt;
        s.hist = *h;
        s.btwn = *b;
        return s;
    }
};

/// Complete personal-audit proof: the unchanged stretch straight after the
/// client's old checkpoint, then one step per appended value. The covered
/// version counts must tile [old version, head version] exactly.
struct AuditProof {
    BetweenPart initial;
    std::vector<AuditStep> steps;

    void encode(Bytes& out) const {
        initial.encode(out);
        put_u32be(out, uint32_t(steps.size()));
        for (const auto& s : steps) s.encode(out);
    }

    static std::optional<AuditProof> decode(ByteReader& r) {
        AuditProof p;
        auto b = BetweenPart::decode(r);
        if (!b) return std::nullopt;
        p.initial = *b;
        uint32_t n = r.u32be();
        for (uint32_t i = 0; i < n; ++i) {
            auto s = AuditStep::decode(r);
            if (!s) return std::nullopt;
            p.steps.push_back(*s);
        }
        if (!r.ok()) return std::nullopt;
        return p;
    }
};

namespace detail {

/// Folds a claimed rightmost leaf against its left-hand range and returns
/// the implied root, or nullopt if the proof shape is wrong.
inline std::optional<Digest> rightmost_root(const RangeInclusionProof& pi, uint64_t tree_size,
                                            const Digest& leaf_digest) {
    if (tree_size == 0) return std::nullopt;
    auto left = pin_range(pi.left, 0, tree_size - 1);
    auto right = pin_range(pi.right, tree_size, tree_size);
    if (!left || !right) return std::nullopt;
    CompactRange merged = merge({*left, leaf_range(tree_size - 1, leaf_digest)});
    return range_to_root(merged);
}

}  // namespace detail

class Registry {
  public:
    struct AppendPair {
        Bytes key;
        Bytes value;
    };

    /// Fresh registry with a signed genesis checkpoint over the empty MRL.
    explicit Registry(KeyPair server_key, uint64_t genesis_time = 0)
        : key_(std::move(server_key)) {
        map_versions_.push_back(SparseMap{});
        checkpoints_.push_back(make_checkpoint(empty_root(), 0, genesis_time, key_));
    }

    const PublicKey& public_key() const { return key_.pk; }
    uint64_t head_version() const { return mrl_.size(); }
    const Checkpoint& head_checkpoint() const { return checkpoints_.back(); }

    const Checkpoint& checkpoint_at(uint64_t version) const {
        if (version >= checkpoints_.size()) throw Error(Errc::UnknownCheckpoint, "version");
        return checkpoints_[version];
    }

    const SparseMap& map_at(uint64_t version) const {
        if (version < oldest_snapshot_ || version - oldest_snapshot_ >= map_versions_.size())
            throw Error(Errc::UnknownCheckpoint, "map version outside retention window");
        return map_versions_[version - oldest_snapshot_];
    }

    std::vector<Bytes> keys() const {
        std::vector<Bytes> out;
        for (const auto& [k, _] : table_) out.push_back(k);
        return out;
    }

    const std::vector<Bytes>* history(const Bytes& key) const {
        auto it = table_.find(key);
        return it == table_.end() ? nullptr : &it->second.values;
    }

    /// Appends one value per key (keys distinct within the batch), advances
    /// the map, and checkpoints the new map root in the MRL.
    Checkpoint append(std::span<const AppendPair> batch, uint64_t timestamp) {
        std::vector<std::pair<MapKey, Digest>> updates;
        updates.reserve(batch.size());
        uint64_t new_version = head_version() + 1;

        std::vector<Bytes> seen;
        for (const auto& p : batch) {
            for (const auto& s : seen)
                if (s == p.key) throw Error(Errc::DuplicateKey, "append batch");
            seen.push_back(p.key);
        }

        for (const auto& p : batch) {
            KeyState& ks = table_[p.key];
            ks.values.push_back(p.value);
            ks.leaflog.append_entry(leaflog_entry(p.value));
            ks.change_versions.push_back(new_version);
            updates.emplace_back(map_key(p.key),
                                 map_leaf_value(ks.leaflog.root(), ks.leaflog.size()));
        }

        SparseMap next = current_map().batch_update(updates);
        map_versions_.push_back(next);
        mrl_.append_entry(mrl_entry(next.root()));
        Checkpoint c = make_checkpoint(mrl_.root(), mrl_.size(), timestamp, key_);
        checkpoints_.push_back(c);
        prune_snapshots();
        return c;
    }

    Checkpoint append_one(const Bytes& key, const Bytes& value, uint64_t timestamp) {
        AppendPair p{key, value};
        return append(std::span(&p, 1), timestamp);
    }

    // --- Lookup ------------------------------------------------------------

    struct LookupResult {
        std::optional<Bytes> value;  // nullopt: key absent (default-leaf proof)
        LookupProof proof;
    };

    LookupResult lookup(const Bytes& key) const {
        LookupResult out;
        uint64_t v = head_version();
        auto it = table_.find(key);
        if (it != table_.end()) {
            const KeyState& ks = it->second;
            out.value = ks.values.back();
            uint64_t n = ks.leaflog.size();
            out.proof.leaflog_size = n;
            out.proof.pi_leaflog = ks.leaflog.prove_incl_at(n - 1);
        }
        out.proof.pi_map = map_at(v).prove_inclusion(map_key(key));
        if (v > 0) out.proof.pi_mrl = mrl_.prove_incl_at(v - 1, v);
        return out;
    }

    // --- Hist ----------------------------------------------------------------

    struct HistResult {
        std::vector<Bytes> new_values;
        HistProof proof;
        Checkpoint checkpoint;  // head
    };

    HistResult hist(const Bytes& key, const HistRep& old) const {
        return hist_at(key, old.leaflog_size(), old.version(), head_version());
    }

    // --- Audit ---------------------------------------------------------------

    struct AuditResult {
        std::vector<Bytes> new_values;
        AuditProof proof;
        Checkpoint checkpoint;  // head
    };

    AuditResult audit(const Bytes& key, const HistRep& old) const {
        uint64_t v0 = old.version();
        if (v0 > head_version()) throw Error(Errc::UnknownCheckpoint, "audit anchor");
        if (checkpoints_[v0].root != old.checkpoint.root)
            throw Error(Errc::UnknownCheckpoint, "audit anchor root");

        AuditResult out;
        out.checkpoint = head_checkpoint();

        auto it = table_.find(key);
        std::vector<uint64_t> changes;
        uint64_t old_count = old.leaflog_size();
        if (it != table_.end()) {
            for (uint64_t cv : it->second.change_versions)
                if (cv > v0) changes.push_back(cv);
            uint64_t total = it->second.values.size();
            if (old_count > total) throw Error(Errc::StaleAhead, "audit");
            for (uint64_t i = old_count; i < total; ++i)
                out.new_values.push_back(it->second.values[i]);
        }

        // Leaf-log commitment as of the anchor version.
        Digest cur_root = old.leaflog_root();
        uint64_t cur_size = old_count;
        MapKey mk = map_key(key);

        uint64_t from = v0;
        uint64_t next_change = changes.empty() ? head_version() + 1 : changes[0];
        out.proof.initial =
            make_between(mk, cur_root, cur_size, from + 1,
                         std::min(next_change - 1, head_version()), /*with_base=*/true);

        for (size_t j = 0; j < changes.size(); ++j) {
            uint64_t vj = changes[j];
            AuditStep step;
            step.value = it->second.values[old_count + j];
            step.checkpoint = checkpoints_[vj];
            step.hist = hist_proof_at(mk, vj);

            // Commitment after this change.
            cur_size += 1;
            cur_root = leaflog_root_at(it->second, cur_size);

            uint64_t next = (j + 1 < changes.size()) ? changes[j + 1] : head_version() + 1;
            step.btwn = make_between(mk, cur_root, cur_size, vj + 1,
                                     std::min(next - 1, head_version()), /*with_base=*/false);
            out.proof.steps.push_back(std::move(step));
        }
        return out;
    }

    /// Witness-providing proof for relation R: the key's leaf log commitment
    /// (root, size) is included in every map version in [from, to].
    BetweenPart prove_between(const Bytes& key, const Digest& leaflog_root, uint64_t leaflog_size,
                              uint64_t from_version, uint64_t to_version) const {
        return make_between(map_key(key), leaflog_root, leaflog_size, from_version, to_version,
                            /*with_base=*/true);
    }

    /// MRL consistency proof, used when gossiping registry checkpoints.
    RangeConsistencyProof prove_mrl_append(uint64_t old_size, uint64_t new_size) const {
        return mrl_.prove_append_sizes(old_size, new_size);
    }

    /// Keep only the newest `window` map snapshots (0 = unlimited, the
    /// default). Between proofs reaching behind the window fail with
    /// UnknownCheckpoint; everything anchored at retained versions still
    /// works.
    void set_retention(uint64_t window) {
        retention_ = window;
        prune_snapshots();
    }

    // --- persistence ---------------------------------------------------------

    void save(const std::filesystem::path& dir) const;
    static Registry load(const std::filesystem::path& dir);
    static KeyPair load_or_create_key(const std::filesystem::path& dir);

  private:
    struct KeyState {
        std::vector<Bytes> values;
        LogState leaflog;  // entries are H(value)
        std::vector<uint64_t> change_versions;
    };

    HistResult hist_at(const Bytes& key, uint64_t old_size, uint64_t old_version,
                       uint64_t at_version) const {
        HistResult out;
        out.checkpoint = checkpoints_[at_version];
        auto it = table_.find(key);
        uint64_t cur = 0;
        if (it != table_.end()) cur = it->second.leaflog.size();
        if (old_size > cur) throw Error(Errc::StaleAhead, "hist");
        if (it != table_.end())
            for (uint64_t i = old_size; i < cur; ++i) out.new_values.push_back(it->second.values[i]);
        out.proof = hist_proof_at(map_key(key), at_version);
        out.proof.mrl_delta = mrl_.range(old_version, at_version);
        return out;
    }

    HistProof hist_proof_at(const MapKey& mk, uint64_t version) const {
        HistProof p;
        p.pi_map = map_at(version).prove_inclusion(mk);
        if (version > 0) p.pi_mrl = mrl_.prove_incl_at(version - 1, version);
        p.mrl_delta.lo = p.mrl_delta.hi = version;
        return p;
    }

    Digest leaflog_root_at(const KeyState& ks, uint64_t size) const {
        return size == 0 ? empty_root() : ks.leaflog.root_at(size);
    }

    BetweenPart make_between(const MapKey& mk, const Digest& leaflog_root, uint64_t leaflog_size,
                             uint64_t from, uint64_t to, bool with_base) const {
        BetweenPart out;
        if (from > to) return out;
        if (to > head_version()) throw Error(Errc::UnknownCheckpoint, "between range");
        (void)leaflog_root;
        (void)leaflog_size;
        MapInclusionProof prev = map_at(from - 1).prove_inclusion(mk);
        for (uint64_t v = from; v <= to; ++v) {
            out.roots.push_back(map_at(v).root());
            MapInclusionProof cur = map_at(v).prove_inclusion(mk);
            if (v == from && with_base)
                out.base = cur;
            else
                out.deltas.push_back(MapProofDelta::diff(prev, cur));
            prev = std::move(cur);
        }
        return out;
    }

    SparseMap& current_map() { return map_versions_.back(); }
    const SparseMap& current_map() const { return map_versions_.back(); }

    void prune_snapshots() {
        if (retention_ == 0) return;
        while (map_versions_.size() > retention_) {
            map_versions_.erase(map_versions_.begin());
            ++oldest_snapshot_;
        }
    }

    KeyPair key_;
    std::map<Bytes, KeyState> table_;
    LogState mrl_;
    std::vector<SparseMap> map_versions_;   // snapshot of version oldest_snapshot_ + i
    uint64_t oldest_snapshot_ = 0;
    uint64_t retention_ = 0;                // 0 = keep every version
    std::vector<Checkpoint> checkpoints_;   // index = version
};

// --- client-side verification ---------------------------------------------

/// Shared map-stage fold: runs the key's committed value up the sparse map
/// using the proof's siblings. Returns the implied map root.
inline std::optional<Digest> fold_map_value(const Bytes& key, const Digest& committed,
                                            const MapInclusionProof& pi_map, std::string& why) {
    if (pi_map.popcount() != pi_map.siblings.size()) {
        why = "map: bitmap/sibling count mismatch";
        return std::nullopt;
    }
    Digest cur = committed;
    MapKey mk = map_key(key);
    size_t next = 0;
    for (size_t h = 0; h < 256; ++h) {
        const Digest& sib = pi_map.bit(h) ? pi_map.siblings[next++] : default_hash(h);
        cur = mk.bit(255 - h) ? node_hash(sib, cur) : node_hash(cur, sib);
    }
    return cur;
}

inline std::optional<Digest> fold_map_stage(const Bytes& key, const Digest& leaflog_root,
                                            uint64_t leaflog_size, const MapInclusionProof& pi_map,
                                            std::string& why) {
    return fold_map_value(key, committed_map_value(leaflog_root, leaflog_size), pi_map, why);
}

inline Verdict verify_mrl_rightmost(const Checkpoint& checkpoint, const Digest& map_root,
                                    const RangeInclusionProof& pi_mrl) {
    if (checkpoint.size == 0) return Verdict::reject("mrl: empty MRL has no leaves");
    Digest leaf = leaf_hash(mrl_entry(map_root));
    return verify_inclusion(checkpoint.root, checkpoint.size, leaf, checkpoint.size - 1, pi_mrl);
}

/// VerLookup: recompute the leaf-log root from H(val) as rightmost leaf,
/// fold it through the map, then check the map root is the rightmost MRL
/// leaf of the checkpoint. A nullopt value verifies non-inclusion (default
/// map leaf, empty history).
inline Verdict ver_lookup(const Checkpoint& checkpoint, const Bytes& key,
                          const std::optional<Bytes>& value, const LookupProof& proof) {
    Digest leaflog_root;
    uint64_t leaflog_size = 0;
    if (value) {
        if (proof.leaflog_size == 0) return Verdict::reject("leaflog: zero size with value");
        Digest leaf = leaf_hash(leaflog_entry(*value));
        auto root = detail::rightmost_root(proof.pi_leaflog, proof.leaflog_size, leaf);
        if (!root) return Verdict::reject("leaflog: malformed rightmost proof");
        leaflog_root = *root;
        leaflog_size = proof.leaflog_size;
    } else {
        if (proof.leaflog_size != 0) return Verdict::reject("leaflog: size claimed for absent key");
    }

    std::string why;
    // Absent key: the map must commit the default leaf on this path.
    auto map_root = fold_map_stage(key, leaflog_root, leaflog_size, proof.pi_map, why);
    if (!map_root) return Verdict::reject(why);

    Verdict v = verify_mrl_rightmost(checkpoint, *map_root, proof.pi_mrl);
    if (!v) return Verdict::reject("mrl: " + v.reason);
    return Verdict::accept();
}

/// VerHist: fold the new entries onto the cached leaf-log frontier, verify
/// the map and MRL stages at the offered checkpoint, and roll the MRL
/// frontier forward through the delta range. Returns the updated HistRep on
/// acceptance.
struct HistOutcome {
    Verdict verdict;
    HistRep updated;
};

inline HistOutcome ver_hist(const Checkpoint& checkpoint, const Bytes& key, const HistRep& old,
                            std::span<const Bytes> new_values, const HistProof& proof) {
    HistOutcome out;
    if (checkpoint.size < old.version()) {
        out.verdict = Verdict::reject("checkpoint: version regression");
        return out;
    }

    CompactRange leaf_frontier = old.leaf_frontier;
    uint64_t n = old.leaflog_size();
    for (const Bytes& val : new_values) {
        leaf_frontier = incremental_update(leaf_frontier, leaf_range(n, leaf_hash(leaflog_entry(val))));
        ++n;
    }
    // n == 0 is the never-registered case; the map stage then checks the
    // default leaf, i.e. a verifiable empty history.
    Digest leaflog_root = n == 0 ? empty_root() : range_to_root(leaf_frontier);

    std::string why;
    auto map_root = fold_map_stage(key, leaflog_root, n, proof.pi_map, why);
    if (!map_root) {
        out.verdict = Verdict::reject(why);
        return out;
    }

    Verdict mv = verify_mrl_rightmost(checkpoint, *map_root, proof.pi_mrl);
    if (!mv) {
        out.verdict = Verdict::reject("mrl: " + mv.reason);
        return out;
    }

    // Advance the cached MRL frontier; the fold must land on the checkpoint
    // root, which also re-checks append-only consistency client-side.
    auto delta = pin_range(proof.mrl_delta, old.version(), checkpoint.size);
    if (!delta) {
        out.verdict = Verdict::reject("mrl: delta endpoints");
        return out;
    }
    CompactRange mrl_frontier;
    try {
        mrl_frontier = incremental_update(old.mrl_frontier, *delta);
    } catch (const Error&) {
        out.verdict = Verdict::reject("mrl: delta not contiguous");
        return out;
    }
    if (range_to_root(mrl_frontier) != checkpoint.root) {
        out.verdict = Verdict::reject("mrl: frontier fold mismatch");
        return out;
    }

    out.verdict = Verdict::accept();
    out.updated = HistRep{checkpoint, mrl_frontier, leaf_frontier};
    return out;
}

/// Statement side of relation R for one between part.
struct BetweenStatement {
    Bytes key;
    Digest leaflog_root;
    uint64_t leaflog_size = 0;
    uint64_t first_version = 0;  // version of the first covered map root
};

/// Verifies one between part against a running MRL frontier, folding each
/// intermediate map root into it. `prev_map_proof` seeds the delta chain
/// when the part has no base proof. On success the frontier has advanced by
/// |roots| versions and the last decompressed proof is returned for
/// chaining.
inline Verdict verify_between(const BetweenStatement& x, const BetweenPart& part,
                              CompactRange& mrl_frontier,
                              std::optional<MapInclusionProof>& prev_map_proof) {
    size_t expected_deltas = part.roots.size() - (part.base ? 1 : 0);
    if (part.roots.empty()) {
        if (part.base || !part.deltas.empty()) return Verdict::reject("between: spurious proofs");
        return Verdict::accept();
    }
    if (part.deltas.size() != expected_deltas) return Verdict::reject("between: proof count");
    if (!part.base && !prev_map_proof) return Verdict::reject("between: no chain base");
    if (part.base && part.base->popcount() != part.base->siblings.size())
        return Verdict::reject("between: malformed base proof");

    Digest committed = committed_map_value(x.leaflog_root, x.leaflog_size);
    MapKey mk = map_key(x.key);

    MapInclusionProof cur;
    size_t delta_i = 0;
    for (size_t i = 0; i < part.roots.size(); ++i) {
        if (i == 0 && part.base) {
            cur = *part.base;
        } else {
            const MapInclusionProof& prev = (i == 0) ? *prev_map_proof : cur;
            auto applied = part.deltas[delta_i].apply(prev);
            ++delta_i;
            if (!applied) return Verdict::reject("between: delta decompression");
            cur = *applied;
        }
        Verdict mv = map_verify_inclusion(part.roots[i], mk, committed, cur);
        if (!mv) return Verdict::reject("between: inclusion at version " +
                                        std::to_string(x.first_version + i));
        uint64_t version = x.first_version + i;
        mrl_frontier = incremental_update(mrl_frontier,
                                          leaf_range(version - 1, leaf_hash(mrl_entry(part.roots[i]))));
    }
    prev_map_proof = cur;
    return Verdict::accept();
}

/// VerAudit: verify each appended value's hist proof at its own checkpoint,
/// each between part across the unchanged versions, fold every intermediate
/// map root into the MRL frontier, and require the covered versions to tile
/// [old version, head version] exactly.
struct AuditOutcome {
    Verdict verdict;
    HistRep updated;
};

inline AuditOutcome ver_audit(const Checkpoint& head, const Bytes& key, const HistRep& old,
                              std::span<const Bytes> new_values, const AuditProof& proof,
                              const PublicKey* server_pk = nullptr) {
    AuditOutcome out;
    auto reject = [&](std::string why) {
        out.verdict = Verdict::reject(std::move(why));
        return out;
    };

    if (head.size < old.version()) return reject("checkpoint: version regression");
    if (new_values.size() != proof.steps.size()) return reject("audit: value/step count mismatch");

    // Tiling: every version in (old, head] must be covered exactly once,
    // either by a step (value appended) or by a between root.
    uint64_t covered = uint64_t(proof.initial.roots.size());
    for (const auto& s : proof.steps) covered += 1 + uint64_t(s.btwn.roots.size());
    if (covered != head.size - old.version()) return reject("GapInCoverage: version tiling");

    CompactRange mrl_frontier = old.mrl_frontier;
    CompactRange leaf_frontier = old.leaf_frontier;
    Digest cur_root = old.leaflog_root();
    uint64_t cur_size = old.leaflog_size();
    uint64_t cursor = old.version();
    std::optional<MapInclusionProof> chain;  // last verified map proof

    BetweenStatement x{key, cur_root, cur_size, cursor + 1};
    if (!proof.initial.roots.empty() && !proof.initial.base)
        return reject("between: initial part missing base proof");
    Verdict bv = verify_between(x, proof.initial, mrl_frontier, chain);
    if (!bv) return reject(bv.reason);
    cursor += proof.initial.roots.size();

    for (size_t j = 0; j < proof.steps.size(); ++j) {
        const AuditStep& s = proof.steps[j];
        if (s.value != new_values[j]) return reject("audit: step value mismatch");
        uint64_t vj = cursor + 1;
        if (s.checkpoint.size != vj) return reject("audit: step checkpoint version");
        if (server_pk && !s.checkpoint.verify(*server_pk))
            return reject("audit: step checkpoint signature");

        // Hist stage at this step's own checkpoint.
        leaf_frontier = incremental_update(leaf_frontier,
                                           leaf_range(cur_size, leaf_hash(leaflog_entry(s.value))));
        cur_size += 1;
        cur_root = range_to_root(leaf_frontier);

        std::string why;
        auto map_root = fold_map_stage(key, cur_root, cur_size, s.hist.pi_map, why);
        if (!map_root) return reject("audit step " + std::to_string(j) + ": " + why);
        Verdict mv = verify_mrl_rightmost(s.checkpoint, *map_root, s.hist.pi_mrl);
        if (!mv) return reject("audit step " + std::to_string(j) + " mrl: " + mv.reason);

        mrl_frontier = incremental_update(mrl_frontier,
                                          leaf_range(vj - 1, leaf_hash(mrl_entry(*map_root))));
        if (range_to_root(mrl_frontier) != s.checkpoint.root)
            return reject("audit step " + std::to_string(j) + ": frontier fold mismatch");
        cursor = vj;
        chain = s.hist.pi_map;

        BetweenStatement xs{key, cur_root, cur_size, cursor + 1};
        Verdict sv = verify_between(xs, s.btwn, mrl_frontier, chain);
        if (!sv) return reject(sv.reason);
        cursor += s.btwn.roots.size();
    }

    if (cursor != head.size) return reject("GapInCoverage: cursor short of head");
    if (head.size > 0) {
        if (range_to_root(mrl_frontier) != head.root) return reject("mrl: head fold mismatch");
    } else if (head.root != empty_root()) {
        return reject("mrl: bad genesis root");
    }

    out.verdict = Verdict::accept();
    out.updated = HistRep{head, mrl_frontier, leaf_frontier};
    return out;
}

/// The client's distinguished starting state: genesis checkpoint, empty
/// frontiers, empty history.
inline HistRep empty_hist_rep(const Checkpoint& genesis) {
    return HistRep{genesis, CompactRange{}, CompactRange{}};
}

// --- persistence ------------------------------------------------------------
//
// Directory layout:
//   server.key            64-byte signing key + 32-byte public key
//   mrl.log               MRL record file (length-prefixed map roots)
//   checkpoints.bin       concatenated 112-byte checkpoints (incl. genesis)
//   versions/<v>.delta    append batch of version v: (key, value) records
//   keys/<hex>.log        leaf-log record file per key (entries are H(val))
// The sparse map is rebuilt by replaying the per-version delta files; the
// replayed MRL must reproduce the stored checkpoints exactly.

namespace detail {

inline void write_file(const std::filesystem::path& p, const Bytes& data) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(Errc::IoError, p.string());
    os.write(reinterpret_cast<const char*>(data.data()), long(data.size()));
}

inline Bytes read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary | std::ios::ate);
    if (!is) throw Error(Errc::IoError, p.string());
    auto n = is.tellg();
    is.seekg(0);
    Bytes out(static_cast<size_t>(n), 0);
    if (n > 0 && !is.read(reinterpret_cast<char*>(out.data()), n))
        throw Error(Errc::IoError, p.string());
    return out;
}

inline void put_record(Bytes& out, const Bytes& rec) {
    put_u32be(out, uint32_t(rec.size()));
    out.insert(out.end(), rec.begin(), rec.end());
}

inline std::vector<Bytes> read_records(const Bytes& in) {
    std::vector<Bytes> out;
    ByteReader r(in);
    while (r.ok() && r.remaining() > 0) {
        uint32_t n = r.u32be();
        Bytes rec = r.raw(n);
        if (!r.ok()) throw Error(Errc::IoError, "truncated record");
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace detail

inline void Registry::save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "versions");
    fs::create_directories(dir / "keys");

    Bytes keyfile(key_.sk.begin(), key_.sk.end());
    keyfile.insert(keyfile.end(), key_.pk.begin(), key_.pk.end());
    detail::write_file(dir / "server.key", keyfile);

    mrl_.save_entries(dir / "mrl.log");

    Bytes cps;
    for (const Checkpoint& c : checkpoints_) {
        Bytes b = c.serialize();
        cps.insert(cps.end(), b.begin(), b.end());
    }
    detail::write_file(dir / "checkpoints.bin", cps);

    // Per-version delta files: the (key, value) batch of each append,
    // sorted by key (std::map iteration order).
    std::vector<Bytes> deltas(head_version() + 1);
    for (const auto& [key, ks] : table_) {
        for (size_t j = 0; j < ks.values.size(); ++j) {
            Bytes& d = deltas[ks.change_versions[j]];
            detail::put_record(d, key);
            detail::put_record(d, ks.values[j]);
        }
        ks.leaflog.save_entries(dir / "keys" / (to_hex(map_key(key)).substr(0, 16) + ".log"));
    }
    for (uint64_t v = 1; v <= head_version(); ++v)
        detail::write_file(dir / "versions" / (std::to_string(v) + ".delta"), deltas[v]);
}

inline Registry Registry::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    Bytes keyfile = detail::read_file(dir / "server.key");
    if (keyfile.size() != 96) throw Error(Errc::IoError, "server.key");
    KeyPair kp;
    std::copy(keyfile.begin(), keyfile.begin() + 64, kp.sk.begin());
    std::copy(keyfile.begin() + 64, keyfile.end(), kp.pk.begin());

    Bytes cps = detail::read_file(dir / "checkpoints.bin");
    if (cps.size() % Checkpoint::kWireBytes != 0 || cps.empty())
        throw Error(Errc::IoError, "checkpoints.bin");
    size_t n_versions = cps.size() / Checkpoint::kWireBytes - 1;

    auto genesis = Checkpoint::deserialize(std::span(cps.data(), Checkpoint::kWireBytes));
    if (!genesis) throw Error(Errc::IoError, "genesis checkpoint");
    Registry reg(kp, genesis->timestamp);

    for (uint64_t v = 1; v <= n_versions; ++v) {
        auto cp = Checkpoint::deserialize(
            std::span(cps.data() + v * Checkpoint::kWireBytes, Checkpoint::kWireBytes));
        if (!cp) throw Error(Errc::IoError, "checkpoint record");
        Bytes delta = detail::read_file(dir / "versions" / (std::to_string(v) + ".delta"));
        ByteReader r(delta);
        std::vector<AppendPair> batch;
        while (r.ok() && r.remaining() > 0) {
            uint32_t klen = r.u32be();
            Bytes key = r.raw(klen);
            uint32_t vlen = r.u32be();
            Bytes value = r.raw(vlen);
            if (!r.ok()) throw Error(Errc::IoError, "delta record at version " + std::to_string(v));
            batch.push_back({std::move(key), std::move(value)});
        }
        Checkpoint rebuilt = reg.append(batch, cp->timestamp);
        if (rebuilt.root != cp->root || rebuilt.size != cp->size)
            throw Error(Errc::IoError, "replay mismatch at version " + std::to_string(v));
    }
    return reg;
}

inline KeyPair Registry::load_or_create_key(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::path f = dir / "server.key";
    if (fs::exists(f)) {
        Bytes keyfile = detail::read_file(f);
        if (keyfile.size() != 96) throw Error(Errc::IoError, "server.key");
        KeyPair kp;
        std::copy(keyfile.begin(), keyfile.begin() + 64, kp.sk.begin());
        std::copy(keyfile.begin() + 64, keyfile.end(), kp.pk.begin());
        return kp;
    }
    return KeyPair::generate();
}

}  // namespace molog

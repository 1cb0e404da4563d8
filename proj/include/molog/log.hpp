// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <vector>

#include "molog/checkpoint.hpp"
#include "molog/compact_range.hpp"
#include "molog/hashing.hpp"

namespace molog {

using Entry = Bytes;

/// Append-only history tree over opaque entries.
///
/// Alongside the entries it keeps the frozen-subtree forest: level h holds
/// the digest of every completed perfect subtree (h, i). Since perfect
/// subtrees never change once complete, appends only extend the levels and
/// any compact range can be served straight from the forest. The forest is
/// regenerable from the entries, so only entries are persisted.
class LogState {
  public:
    LogState() = default;

    uint64_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    void append_entry(const Entry& e) {
        entries_.push_back(e);
        Digest d = leaf_hash(e);
        uint64_t h = 0, i = entries_.size() - 1;
        for (;;) {
            if (levels_.size() <= h) levels_.emplace_back();
            levels_[h].push_back(d);
            if (i % 2 == 0) break;
            d = node_hash(levels_[h][i - 1], d);
            i /= 2;
            ++h;
        }
    }

    Digest node_digest(const NodeId& id) const {
        if (id.height >= levels_.size() || id.index >= levels_[id.height].size())
            throw Error(Errc::RangeOutOfBounds, "node_digest");
        return levels_[id.height][id.index];
    }

    NodeDigestFn digests() const {
        return [this](const NodeId& id) { return node_digest(id); };
    }

    CompactRange range(uint64_t lo, uint64_t hi) const {
        return compute_range(size(), lo, hi, digests());
    }

    /// Frontier compact range over [0, N); empty log gives an empty range.
    CompactRange frontier() const { return range(0, size()); }

    Digest root() const {
        if (entries_.empty()) return empty_root();
        return range_to_root(frontier());
    }

    /// Root as of an earlier size (used for proofs anchored at old
    /// checkpoints).
    Digest root_at(uint64_t n) const {
        if (n > size()) throw Error(Errc::RangeOutOfBounds, "root_at");
        if (n == 0) return empty_root();
        return range_to_root(range(0, n));
    }

    /// Appends a batch and returns a fresh signed checkpoint. Empty batches
    /// are allowed: same root, new timestamp and signature.
    Checkpoint append(std::span<const Entry> batch, uint64_t timestamp, const KeyPair& key) {
        for (const Entry& e : batch) append_entry(e);
        Checkpoint c = make_checkpoint(root(), size(), timestamp, key);
        roots_by_size_[size()] = c.root;
        return c;
    }

    /// First index holding `entry`, if present.
    std::optional<uint64_t> find(const Entry& entry) const {
        for (uint64_t i = 0; i < entries_.size(); ++i)
            if (entries_[i] == entry) return i;
        return std::nullopt;
    }

    RangeInclusionProof prove_incl_at(uint64_t index, uint64_t tree_size) const {
        if (index >= tree_size || tree_size > size())
            throw Error(Errc::RangeOutOfBounds, "prove_incl_at");
        return RangeInclusionProof{range(0, index), range(index + 1, tree_size)};
    }

    RangeInclusionProof prove_incl_at(uint64_t index) const { return prove_incl_at(index, size()); }

    /// Proof for the first occurrence of `entry` at the current size.
    std::pair<uint64_t, RangeInclusionProof> prove_incl(const Entry& entry) const {
        auto idx = find(entry);
        if (!idx) throw Error(Errc::EntryNotFound, "prove_incl");
        return {*idx, prove_incl_at(*idx)};
    }

    /// Inclusion proof for a run of consecutive leaves [first, first+count).
    RangeInclusionProof prove_incl_run(uint64_t first, uint64_t count, uint64_t tree_size) const {
        if (first + count > tree_size || tree_size > size())
            throw Error(Errc::RangeOutOfBounds, "prove_incl_run");
        return RangeInclusionProof{range(0, first), range(first + count, tree_size)};
    }

    RangeConsistencyProof prove_append_sizes(uint64_t old_size, uint64_t new_size) const {
        if (old_size > new_size || new_size > size())
            throw Error(Errc::RangeOutOfBounds, "prove_append_sizes");
        return RangeConsistencyProof{range(0, old_size), range(old_size, new_size)};
    }

    /// Consistency proof between two checkpoints this log issued. Rejects
    /// roots it never produced at the claimed sizes.
    RangeConsistencyProof prove_append(const Checkpoint& old_cp, const Checkpoint& new_cp) const {
        check_known(old_cp);
        check_known(new_cp);
        if (old_cp.size > new_cp.size) throw Error(Errc::RangeOutOfBounds, "prove_append");
        return prove_append_sizes(old_cp.size, new_cp.size);
    }

    /// Test-only oracle: does the checkpoint commit to exactly this entry
    /// list? Never on a client hot path.
    static bool ver_com(const Checkpoint& c, std::span<const Entry> entries) {
        if (entries.size() != c.size) return false;
        if (entries.empty()) return c.root == empty_root();
        return mth(entries) == c.root;
    }

    // --- persistence: length-prefixed records, append-only ---------------

    void save_entries(const std::filesystem::path& file) const {
        std::ofstream os(file, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(Errc::IoError, file.string());
        for (const Entry& e : entries_) {
            Bytes hdr;
            put_u32be(hdr, uint32_t(e.size()));
            os.write(reinterpret_cast<const char*>(hdr.data()), long(hdr.size()));
            os.write(reinterpret_cast<const char*>(e.data()), long(e.size()));
        }
    }

    static LogState load_entries(const std::filesystem::path& file) {
        std::ifstream is(file, std::ios::binary);
        if (!is) throw Error(Errc::IoError, file.string());
        LogState log;
        for (;;) {
            uint8_t hdr[4];
            if (!is.read(reinterpret_cast<char*>(hdr), 4)) break;
            uint32_t len = uint32_t(hdr[0]) << 24 | uint32_t(hdr[1]) << 16 | uint32_t(hdr[2]) << 8 | hdr[3];
            Entry e(len);
            if (len && !is.read(reinterpret_cast<char*>(e.data()), len))
                throw Error(Errc::IoError, "truncated record");
            log.append_entry(e);
        }
        return log;
    }

  private:
    void check_known(const Checkpoint& c) const {
        if (c.size > size()) throw Error(Errc::UnknownCheckpoint, "size ahead of log");
        if (root_at(c.size) != c.root) throw Error(Errc::UnknownCheckpoint, "root mismatch");
    }

    std::vector<Entry> entries_;
    std::vector<std::vector<Digest>> levels_;
    std::map<uint64_t, Digest> roots_by_size_;
};

}  // namespace molog

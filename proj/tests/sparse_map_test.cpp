// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "molog/sparse_map.hpp"

using namespace molog;

namespace {

MapKey rkey(std::mt19937_64& rng) {
    MapKey k;
    for (auto& b : k.bytes) b = uint8_t(rng());
    return k;
}

Digest rval(std::mt19937_64& rng) {
    Digest d;
    for (auto& b : d.bytes) b = uint8_t(rng());
    return d;
}

/// Naive single-path oracle: fold one leaf against all-default siblings.
Digest single_key_root(const MapKey& key, const Digest& value) {
    Digest cur = value;
    for (size_t h = 0; h < 256; ++h) {
        const Digest& dh = default_hash(h);
        cur = key.bit(255 - h) ? node_hash(dh, cur) : node_hash(cur, dh);
    }
    return cur;
}

}  // namespace

TEST(DefaultHashes, BaseCaseAndRecursion) {
    EXPECT_EQ(default_hash(0), leaf_hash(std::span<const uint8_t>()));
    EXPECT_EQ(default_hash(1), node_hash(default_hash(0), default_hash(0)));
    EXPECT_EQ(default_hash(256), node_hash(default_hash(255), default_hash(255)));
    EXPECT_THROW(default_hash(257), Error);
}

TEST(DefaultHashes, AllLevelsDistinct) {
    std::set<Digest> seen;
    for (size_t h = 0; h <= 256; ++h) seen.insert(default_hash(h));
    EXPECT_EQ(seen.size(), 257u);
}

TEST(BatchUpdate, EmptyBatchOnEmptyMap) {
    SparseMap m;
    EXPECT_EQ(m.root(), default_hash(256));
    SparseMap m2 = m.batch_update({});
    EXPECT_EQ(m2.root(), default_hash(256));
}

TEST(BatchUpdate, SingleKeyMatchesNaiveFold) {
    std::mt19937_64 rng(1);
    for (int iter = 0; iter < 10; ++iter) {
        MapKey k = rkey(rng);
        Digest v = rval(rng);
        SparseMap m = SparseMap{}.update_one(k, v);
        EXPECT_EQ(m.root(), single_key_root(k, v));
        EXPECT_EQ(m.population(), 1u);
    }
}

TEST(BatchUpdate, OrderIndependence) {
    std::mt19937_64 rng(2);
    MapKey k1 = rkey(rng), k2 = rkey(rng);
    Digest v1 = rval(rng), v2 = rval(rng);
    SparseMap seq = SparseMap{}.update_one(k1, v1).update_one(k2, v2);
    SparseMap seq_rev = SparseMap{}.update_one(k2, v2).update_one(k1, v1);
    std::vector<std::pair<MapKey, Digest>> batch{{k1, v1}, {k2, v2}};
    SparseMap batched = SparseMap{}.batch_update(batch);
    EXPECT_EQ(seq.root(), batched.root());
    EXPECT_EQ(seq_rev.root(), batched.root());
}

TEST(BatchUpdate, DeterministicAcrossBatchShuffles) {
    std::mt19937_64 rng(3);
    std::vector<std::pair<MapKey, Digest>> batch;
    for (int i = 0; i < 64; ++i) batch.emplace_back(rkey(rng), rval(rng));
    SparseMap a = SparseMap{}.batch_update(batch);
    std::shuffle(batch.begin(), batch.end(), rng);
    SparseMap b = SparseMap{}.batch_update(batch);
    EXPECT_EQ(a.root(), b.root());
    EXPECT_EQ(a.population(), 64u);
}

TEST(BatchUpdate, DuplicateKeyThrows) {
    std::mt19937_64 rng(4);
    MapKey k = rkey(rng);
    std::vector<std::pair<MapKey, Digest>> batch{{k, rval(rng)}, {k, rval(rng)}};
    EXPECT_THROW(SparseMap{}.batch_update(batch), Error);
}

TEST(BatchUpdate, OverwriteChangesRootAndKeepsPopulation) {
    std::mt19937_64 rng(5);
    MapKey k = rkey(rng);
    SparseMap m1 = SparseMap{}.update_one(k, rval(rng));
    SparseMap m2 = m1.update_one(k, rval(rng));
    EXPECT_NE(m1.root(), m2.root());
    EXPECT_EQ(m2.population(), 1u);
}

TEST(BatchUpdate, SnapshotsStayUsable) {
    std::mt19937_64 rng(6);
    SparseMap v0;
    MapKey k = rkey(rng);
    SparseMap v1 = v0.update_one(k, rval(rng));
    Digest root1 = v1.root();
    SparseMap v2 = v1.update_one(rkey(rng), rval(rng));
    EXPECT_EQ(v1.root(), root1);  // old version untouched by the new one
    EXPECT_NE(v2.root(), root1);
    EXPECT_TRUE(v1.lookup(k).has_value());
}

TEST(ProveInclusion, EmptyMapAllDefault) {
    std::mt19937_64 rng(7);
    SparseMap m;
    MapKey k = rkey(rng);
    MapInclusionProof p = m.prove_inclusion(k);
    EXPECT_EQ(p.popcount(), 0u);
    EXPECT_TRUE(p.siblings.empty());
    EXPECT_TRUE(map_verify_inclusion(m.root(), k, default_hash(0), p));
}

TEST(ProveInclusion, RoundTripAgainstBatchRoot) {
    std::mt19937_64 rng(8);
    std::vector<std::pair<MapKey, Digest>> batch;
    for (int i = 0; i < 100; ++i) batch.emplace_back(rkey(rng), rval(rng));
    SparseMap m = SparseMap{}.batch_update(batch);
    for (int i = 0; i < 100; i += 7) {
        MapInclusionProof p = m.prove_inclusion(batch[i].first);
        ASSERT_TRUE(map_verify_inclusion(m.root(), batch[i].first, batch[i].second, p));
    }
    // Absent key: non-inclusion proof of the default leaf.
    MapKey absent = rkey(rng);
    MapInclusionProof p = m.prove_inclusion(absent);
    EXPECT_TRUE(map_verify_inclusion(m.root(), absent, default_hash(0), p));
    EXPECT_FALSE(map_verify_inclusion(m.root(), absent, rval(rng), p));
}

TEST(ProveInclusion, SiblingCountScalesWithLogPopulation) {
    std::mt19937_64 rng(9);
    std::vector<std::pair<MapKey, Digest>> batch;
    for (int i = 0; i < 1024; ++i) batch.emplace_back(rkey(rng), rval(rng));
    SparseMap m = SparseMap{}.batch_update(batch);
    double total = 0;
    const int samples = 128;
    for (int i = 0; i < samples; ++i) {
        MapInclusionProof p = m.prove_inclusion(batch[size_t(rng()) % batch.size()].first);
        total += double(p.popcount());
    }
    double mean = total / samples;
    // log2(1024) = 10; populated-sibling count concentrates near it.
    EXPECT_GE(mean, 5.0);
    EXPECT_LE(mean, 20.0);
}

TEST(VerifyInclusion, MutationsRejected) {
    std::mt19937_64 rng(10);
    std::vector<std::pair<MapKey, Digest>> batch;
    for (int i = 0; i < 32; ++i) batch.emplace_back(rkey(rng), rval(rng));
    SparseMap m = SparseMap{}.batch_update(batch);
    Digest root = m.root();
    for (int i = 0; i < 32; i += 5) {
        const auto& [k, v] = batch[size_t(i)];
        MapInclusionProof p = m.prove_inclusion(k);
        ASSERT_TRUE(map_verify_inclusion(root, k, v, p));
        // wrong value
        EXPECT_FALSE(map_verify_inclusion(root, k, rval(rng), p));
        // each sibling digest flipped
        for (size_t s = 0; s < p.siblings.size(); ++s) {
            auto bad = p;
            bad.siblings[s].bytes[0] ^= 1;
            EXPECT_FALSE(map_verify_inclusion(root, k, v, bad));
        }
        // bitmap bit cleared (sibling count mismatch -> malformed)
        if (p.popcount() > 0) {
            auto bad = p;
            for (size_t h = 0; h < 256; ++h) {
                if (bad.bit(h)) {
                    bad.bitmap[h / 8] &= uint8_t(~(1u << (7 - h % 8)));
                    break;
                }
            }
            EXPECT_FALSE(map_verify_inclusion(root, k, v, bad));
        }
        // wrong root
        Digest bad_root = root;
        bad_root.bytes[31] ^= 1;
        EXPECT_FALSE(map_verify_inclusion(bad_root, k, v, p));
    }
}

// Lookup security at desk scale: for any populated key, no mutation of an
// honest proof makes a second distinct value verify under the same root.
TEST(LookupSecurity, NoTwoValuesForOneKey) {
    std::mt19937_64 rng(11);
    std::vector<std::pair<MapKey, Digest>> batch;
    for (int i = 0; i < 64; ++i) batch.emplace_back(rkey(rng), rval(rng));
    SparseMap m = SparseMap{}.batch_update(batch);
    Digest root = m.root();
    for (int i = 0; i < 64; i += 9) {
        const auto& [k, v] = batch[size_t(i)];
        MapInclusionProof honest = m.prove_inclusion(k);
        ASSERT_TRUE(map_verify_inclusion(root, k, v, honest));
        // Exhaustive first-byte mutations of every sibling, tried with a
        // different candidate value: none may verify.
        Digest other = v;
        other.bytes[0] ^= 0xff;
        EXPECT_FALSE(map_verify_inclusion(root, k, other, honest));
        for (size_t s = 0; s < honest.siblings.size(); ++s) {
            for (int delta = 1; delta < 256; delta += 85) {
                auto bad = honest;
                bad.siblings[s].bytes[0] = uint8_t(bad.siblings[s].bytes[0] + delta);
                EXPECT_FALSE(map_verify_inclusion(root, k, other, bad));
                EXPECT_FALSE(map_verify_inclusion(root, k, v, bad));
            }
        }
    }
}

TEST(ProofWire, BitmapPlusSiblingsLayoutAndRoundTrip) {
    std::mt19937_64 rng(12);
    std::vector<std::pair<MapKey, Digest>> batch;
    for (int i = 0; i < 50; ++i) batch.emplace_back(rkey(rng), rval(rng));
    SparseMap m = SparseMap{}.batch_update(batch);
    MapInclusionProof p = m.prove_inclusion(batch[17].first);
    Bytes wire;
    p.encode(wire);
    EXPECT_EQ(wire.size(), 32 + 32 * p.siblings.size());
    ByteReader r(wire);
    auto back = MapInclusionProof::decode(r);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, p);
}

TEST(ProofDelta, DiffApplyRoundTrip) {
    std::mt19937_64 rng(13);
    std::vector<std::pair<MapKey, Digest>> batch;
    for (int i = 0; i < 200; ++i) batch.emplace_back(rkey(rng), rval(rng));
    SparseMap v1 = SparseMap{}.batch_update(batch);
    MapKey audited = batch[0].first;
    MapInclusionProof p1 = v1.prove_inclusion(audited);

    std::vector<std::pair<MapKey, Digest>> more;
    for (int i = 0; i < 100; ++i) more.emplace_back(rkey(rng), rval(rng));
    SparseMap v2 = v1.batch_update(more);
    MapInclusionProof p2 = v2.prove_inclusion(audited);

    MapProofDelta d = MapProofDelta::diff(p1, p2);
    auto applied = d.apply(p1);
    ASSERT_TRUE(applied.has_value());
    EXPECT_EQ(*applied, p2);
    // Byte-identical encoding, not just structural equality.
    Bytes full_wire, applied_wire;
    p2.encode(full_wire);
    applied->encode(applied_wire);
    EXPECT_EQ(full_wire, applied_wire);

    Bytes dwire;
    d.encode(dwire);
    ByteReader r(dwire);
    auto dback = MapProofDelta::decode(r);
    ASSERT_TRUE(dback.has_value());
    EXPECT_EQ(*dback, d);
}

TEST(ProofDelta, InconsistentDeltaRejected) {
    std::mt19937_64 rng(14);
    SparseMap v1 = SparseMap{}.update_one(rkey(rng), rval(rng));
    MapKey audited = rkey(rng);
    MapInclusionProof p1 = v1.prove_inclusion(audited);
    SparseMap v2 = v1.update_one(rkey(rng), rval(rng));
    MapInclusionProof p2 = v2.prove_inclusion(audited);
    MapProofDelta d = MapProofDelta::diff(p1, p2);
    if (!d.digests.empty()) {
        auto bad = d;
        bad.digests.pop_back();
        EXPECT_FALSE(bad.apply(p1).has_value());
    }
}

// Depth statistics at the small end: with 64 fresh random keys per version
// the deepest changed sibling tracks the harmonic-number band.
TEST(ProofDelta, DeepestChangeStatisticSmallBatch) {
    std::mt19937_64 rng(77);
    auto rk = [&rng] {
        MapKey k;
        for (auto& b : k.bytes) b = uint8_t(rng());
        return k;
    };
    MapKey audited = rk();
    SparseMap map = SparseMap{}.update_one(audited, rval(rng));
    MapInclusionProof prev = map.prove_inclusion(audited);
    const uint64_t M = 64, trials = 200;
    double sum_deepest = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        std::vector<std::pair<MapKey, Digest>> batch;
        std::set<MapKey> used;
        while (batch.size() < M) {
            MapKey k = rk();
            if (k == audited || !used.insert(k).second) continue;
            batch.emplace_back(k, rval(rng));
        }
        map = map.batch_update(batch);
        MapInclusionProof cur = map.prove_inclusion(audited);
        auto deepest = MapProofDelta::diff(prev, cur).deepest_change_depth();
        ASSERT_TRUE(deepest.has_value());
        sum_deepest += double(*deepest);
        prev = std::move(cur);
    }
    double mean = sum_deepest / double(trials);
    double hm = 0;
    for (uint64_t k = 1; k <= M; ++k) hm += 1.0 / double(k);
    EXPECT_GE(mean, hm / std::log(2.0) - 0.25);
    EXPECT_LE(mean, 1.0 + hm / std::log(2.0) + 0.25);
}

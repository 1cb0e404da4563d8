// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "molog/hashing.hpp"
#include "molog/node_id.hpp"

using namespace molog;

namespace {

Bytes mkentry(uint64_t i) {
    Bytes e;
    put_u64be(e, i);
    return e;
}

std::vector<Bytes> mkentries(size_t n) {
    std::vector<Bytes> out;
    for (size_t i = 0; i < n; ++i) out.push_back(mkentry(i));
    return out;
}

}  // namespace

TEST(LeafHash, EmptyPayloadGoldenVector) {
    // SHA-256 of the single byte 0x00.
    Digest d = leaf_hash(std::span<const uint8_t>());
    EXPECT_EQ(to_hex(d), "6e340b9cffb37a989ca544e6bb780a2c78901d3fb33738768511a30617afa01d");
}

TEST(LeafHash, AbcGoldenVector) {
    Digest d = leaf_hash(str_bytes("abc"));
    EXPECT_EQ(to_hex(d), "609f6e36d2405585188d5cfd761f407c7cc46a7d3f314c88270469dde315fcd1");
}

TEST(LeafHash, DistinctPayloadsDistinctDigests) {
    EXPECT_NE(leaf_hash(str_bytes("a")), leaf_hash(str_bytes("b")));
    // Domain separation: a leaf of [0x01, x, y] must differ from interior
    // hash of (x, y) even though the preimages would collide unprefixed.
    Digest x = leaf_hash(str_bytes("x")), y = leaf_hash(str_bytes("y"));
    Bytes xy(x.bytes.begin(), x.bytes.end());
    xy.insert(xy.end(), y.bytes.begin(), y.bytes.end());
    EXPECT_NE(leaf_hash(xy), node_hash(x, y));
}

TEST(NodeHash, OrderSensitive) {
    Digest a = leaf_hash(str_bytes("a")), b = leaf_hash(str_bytes("b"));
    EXPECT_NE(node_hash(a, b), node_hash(b, a));
}

TEST(NodeHash, FixedVectors) {
    Digest a{}, b;
    b.bytes.fill(0xff);
    EXPECT_EQ(to_hex(node_hash(a, b)),
              "bc6b943b820c449acf880d293c216a24a8066b153f87f2361fae2beda3a72641");
}

TEST(NodeHash, TwoLeafTreeMatchesMth) {
    auto entries = mkentries(2);
    EXPECT_EQ(node_hash(leaf_hash(entries[0]), leaf_hash(entries[1])), mth(entries));
}

TEST(Mth, SingleLeafIsLeafHash) {
    auto entries = mkentries(1);
    EXPECT_EQ(mth(entries), leaf_hash(entries[0]));
}

TEST(Mth, FourLeavesPerfectRecursion) {
    auto e = mkentries(4);
    Digest want = node_hash(node_hash(leaf_hash(e[0]), leaf_hash(e[1])),
                            node_hash(leaf_hash(e[2]), leaf_hash(e[3])));
    EXPECT_EQ(mth(e), want);
}

TEST(Mth, SixLeavesSplitAtFour) {
    auto e = mkentries(6);
    EXPECT_EQ(mth(e), node_hash(mth(e, 0, 4), mth(e, 4, 6)));
}

TEST(Mth, EmptyRangeThrows) {
    auto e = mkentries(3);
    EXPECT_THROW(mth(e, 1, 1), Error);
}

TEST(Mth, DeterministicAndSensitiveToEveryEntry) {
    std::mt19937_64 rng(42);
    for (size_t n : {1, 2, 3, 7, 64, 200, 512}) {
        auto e = mkentries(n);
        Digest base = mth(e);
        EXPECT_EQ(mth(e), base);
        size_t victim = rng() % n;
        e[victim][rng() % e[victim].size()] ^= 0x01;
        EXPECT_NE(mth(e), base) << "n=" << n << " victim=" << victim;
    }
}

TEST(Mth, FrozenSubtreeProperty) {
    // Any perfect subtree fully left of the tree size hashes identically at
    // every larger size.
    auto e = mkentries(300);
    for (size_t n : {64, 65, 100, 128, 255, 256, 300}) {
        std::span<const Bytes> upto(e.data(), n);
        for (size_t h = 0; (1u << h) <= n; ++h) {
            size_t width = 1u << h;
            for (size_t i = 0; (i + 1) * width <= n && i < 4; ++i) {
                Digest at_n = mth(upto, i * width, (i + 1) * width);
                Digest full = mth(e, i * width, (i + 1) * width);
                EXPECT_EQ(at_n, full);
            }
        }
    }
}

TEST(NodeId, ArithmeticRoundTrips) {
    for (uint64_t h = 0; h < 20; ++h) {
        for (uint64_t i : {0ull, 1ull, 2ull, 63ull, 1000ull}) {
            NodeId n{h, i};
            EXPECT_EQ(n.parent().left_child().height, h);
            NodeId back = n.is_left_child() ? n.parent().left_child() : n.parent().right_child();
            EXPECT_EQ(back, n);
            EXPECT_EQ(n.cover_hi() - n.cover_lo(), n.cover_size());
            EXPECT_EQ(n.cover_size(), uint64_t(1) << h);
        }
    }
}

TEST(NodeId, SiblingRelation) {
    EXPECT_TRUE((NodeId{2, 4}).sibling_of({2, 5}));
    EXPECT_FALSE((NodeId{2, 4}).sibling_of({2, 6}));
    EXPECT_FALSE((NodeId{2, 4}).sibling_of({1, 5}));
    EXPECT_FALSE((NodeId{2, 4}).sibling_of({2, 4}));
}

TEST(NodeId, EncodesAsTwoU64Be) {
    NodeId n{3, 0x0102030405060708ull};
    Bytes out;
    n.encode(out);
    ASSERT_EQ(out.size(), 16u);
    EXPECT_EQ(out[7], 3);
    EXPECT_EQ(out[8], 0x01);
    EXPECT_EQ(out[15], 0x08);
    ByteReader r(out);
    EXPECT_EQ(NodeId::decode(r), n);
}

TEST(EmptyRoot, Sha256OfEmptyString) {
    EXPECT_EQ(to_hex(empty_root()),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(NodeHash, AcceleratedPathMatchesPortable) {
    std::mt19937_64 rng(0xd15b);
    for (int i = 0; i < 5000; ++i) {
        Digest a, b;
        for (auto& x : a.bytes) x = uint8_t(rng());
        for (auto& x : b.bytes) x = uint8_t(rng());
        ASSERT_EQ(node_hash(a, b), detail::node_hash_portable(a, b));
    }
}

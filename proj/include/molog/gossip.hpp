// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "molog/checkpoint.hpp"
#include "molog/compact_range.hpp"
#include "molog/signing.hpp"

namespace molog {

using ActorId = uint16_t;

// --- quorum arithmetic -------------------------------------------------------

/// With N_W = V*F + 1 witnesses of which at most F are adversarial, a client
/// accepting only checkpoints countersigned by Q = ceil((V+1)*F/2) + 1
/// witnesses guarantees any two accepted checkpoints share an honest signer.
struct QuorumParams {
    uint64_t f = 0;
    uint64_t q = 0;
};

inline QuorumParams quorum_threshold(uint64_t n_witnesses, uint64_t divisor_v) {
    if (divisor_v == 0 || n_witnesses < 2 || (n_witnesses - 1) % divisor_v != 0)
        throw Error(Errc::InvalidParameters, "N_W = V*F + 1 must hold for integer F >= 1");
    uint64_t f = (n_witnesses - 1) / divisor_v;
    uint64_t q = ((divisor_v + 1) * f + 1) / 2 + 1;
    return {f, q};
}

/// Minimum witness uptime for liveness: ((V+3)*F + 2) / (2*N_W), returned as
/// an exact fraction.
struct Fraction {
    uint64_t num = 0;
    uint64_t den = 1;
    double value() const { return double(num) / double(den); }
};

inline Fraction min_uptime(uint64_t n_witnesses, uint64_t divisor_v) {
    QuorumParams p = quorum_threshold(n_witnesses, divisor_v);
    return {(divisor_v + 3) * p.f + 2, 2 * n_witnesses};
}

/// Client acceptance policy. `q` defaults to the safe Lemma threshold but is
/// overridable: clients have full discretion, including requiring specific
/// witnesses in every quorum.
struct QuorumPolicy {
    uint64_t n_witnesses = 0;
    uint64_t divisor_v = 0;
    uint64_t f = 0;
    uint64_t q = 0;
    std::set<ActorId> required;

    static QuorumPolicy make(uint64_t n_witnesses, uint64_t divisor_v) {
        QuorumParams p = quorum_threshold(n_witnesses, divisor_v);
        return {n_witnesses, divisor_v, p.f, p.q, {}};
    }
};

// --- witness --------------------------------------------------------------

/// Checkpoint countersigned by one witness. Body is exactly 176 bytes on the
/// wire (112-byte checkpoint + 64-byte witness signature); the witness id
/// travels in the message framing.
struct SignedCheckpoint {
    Checkpoint checkpoint;
    Signature witness_signature{};
    ActorId witness_id = 0;

    static constexpr size_t kBodyBytes = Checkpoint::kWireBytes + 64;  // 176

    Bytes body() const {
        Bytes out = checkpoint.serialize();
        out.insert(out.end(), witness_signature.begin(), witness_signature.end());
        return out;
    }

    static std::optional<SignedCheckpoint> from_body(std::span<const uint8_t> in, ActorId witness) {
        if (in.size() != kBodyBytes) return std::nullopt;
        auto cp = Checkpoint::deserialize(in.subspan(0, Checkpoint::kWireBytes));
        if (!cp) return std::nullopt;
        SignedCheckpoint s;
        s.checkpoint = *cp;
        std::copy(in.begin() + Checkpoint::kWireBytes, in.end(), s.witness_signature.begin());
        s.witness_id = witness;
        return s;
    }

    bool verify(const PublicKey& witness_pk) const {
        return verify_signature(witness_pk, checkpoint.serialize(), witness_signature);
    }
};

/// Evidence of server misbehavior a witness hands to an external auditor:
/// the checkpoint pair and the consistency proof that failed.
struct AuditRecord {
    ActorId server_id = 0;
    Checkpoint old_checkpoint;
    Checkpoint new_checkpoint;
    RangeConsistencyProof proof;

    void encode(Bytes& out) const {
        put_u16be(out, server_id);
        Bytes a = old_checkpoint.serialize(), b = new_checkpoint.serialize();
        out.insert(out.end(), a.begin(), a.end());
        out.insert(out.end(), b.begin(), b.end());
        proof.encode(out);
    }
};

enum class OfferStatus {
    Accepted,
    AlreadyStored,
    RejectedBadSignature,
    RejectedStale,
    RejectedInconsistent,
};

struct OfferOutcome {
    OfferStatus status = OfferStatus::RejectedBadSignature;
    std::optional<AuditRecord> audit;

    bool accepted() const {
        return status == OfferStatus::Accepted || status == OfferStatus::AlreadyStored;
    }
};

/// Asks the server for ProveAppend(freshest, offered); the simulator wires
/// this to a message exchange, tests to a direct call.
using ProofChannel =
    std::function<std::optional<RangeConsistencyProof>(const std::optional<Checkpoint>& from,
                                                       const Checkpoint& to)>;

/// A witness stores a bounded list of verified checkpoints per server and
/// countersigns them on request. Offers are verified against the server key
/// and for consistency with the freshest stored checkpoint before anything
/// is stored.
class WitnessState {
  public:
    WitnessState() = default;
    WitnessState(ActorId id, KeyPair key, size_t capacity = 1024)
        : id_(id), key_(std::move(key)), capacity_(capacity) {}

    ActorId id() const { return id_; }
    const PublicKey& public_key() const { return key_.pk; }

    void register_server(ActorId server, const PublicKey& pk) { server_pks_[server] = pk; }

    const std::vector<Checkpoint>& stored(ActorId server) const {
        static const std::vector<Checkpoint> kEmpty;
        auto it = lists_.find(server);
        return it == lists_.end() ? kEmpty : it->second;
    }

    std::optional<Checkpoint> freshest(ActorId server) const {
        const auto& l = stored(server);
        return l.empty() ? std::nullopt : std::optional<Checkpoint>(l.back());
    }

    /// Steps B2-B4: check the server signature, request a consistency proof
    /// from the freshest stored checkpoint, verify it, then store. A failed
    /// proof produces an audit record for external investigation.
    OfferOutcome process_offer(ActorId server, const Checkpoint& offered,
                               const ProofChannel& request_proof) {
        auto pk = server_pks_.find(server);
        if (pk == server_pks_.end() || !offered.verify(pk->second))
            return {OfferStatus::RejectedBadSignature, std::nullopt};

        auto& list = lists_[server];
        for (const Checkpoint& c : list)
            if (c.same_body(offered)) return {OfferStatus::AlreadyStored, std::nullopt};

        std::optional<Checkpoint> from = list.empty() ? std::nullopt
                                                      : std::optional<Checkpoint>(list.back());
        if (from && offered.size < from->size) return {OfferStatus::RejectedStale, std::nullopt};

        auto proof = request_proof(from, offered);
        Digest old_root = from ? from->root : empty_root();
        uint64_t old_size = from ? from->size : 0;
        Verdict v = proof ? verify_consistency(old_root, old_size, offered.root, offered.size, *proof)
                          : Verdict::reject("no proof supplied");
        if (!v) {
            OfferOutcome out{OfferStatus::RejectedInconsistent, std::nullopt};
            AuditRecord rec;
            rec.server_id = server;
            rec.old_checkpoint = from ? *from : Checkpoint{};
            rec.new_checkpoint = offered;
            if (proof) rec.proof = *proof;
            out.audit = std::move(rec);
            return out;
        }

        insert_sorted(list, offered);
        if (list.size() > capacity_) list.erase(list.begin());  // oldest by (size, time)
        return {OfferStatus::Accepted, std::nullopt};
    }

    const std::map<ActorId, std::vector<Checkpoint>>& all_stored() const { return lists_; }

    /// Restores a persisted checkpoint list verbatim (persistence only; the
    /// list is trusted to have been verified when first stored).
    void restore(ActorId server, std::vector<Checkpoint> list) {
        lists_[server] = std::move(list);
    }

    /// Step C2: the min(count, stored) freshest checkpoints for the server,
    /// freshest first, each freshly countersigned.
    std::vector<SignedCheckpoint> collect(ActorId server, uint64_t count) const {
        std::vector<SignedCheckpoint> out;
        const auto& list = stored(server);
        size_t n = std::min<size_t>(count, list.size());
        for (size_t i = 0; i < n; ++i) {
            const Checkpoint& c = list[list.size() - 1 - i];
            SignedCheckpoint s;
            s.checkpoint = c;
            s.witness_signature = key_.sign(c.serialize());
            s.witness_id = id_;
            out.push_back(std::move(s));
        }
        return out;
    }

  private:
    // Lists stay sorted ascending by (size, timestamp); back() is freshest,
    // front() is the eviction victim.
    static void insert_sorted(std::vector<Checkpoint>& list, const Checkpoint& c) {
        auto less_fresh = [](const Checkpoint& a, const Checkpoint& b) {
            return std::pair(a.size, a.timestamp) < std::pair(b.size, b.timestamp);
        };
        list.insert(std::upper_bound(list.begin(), list.end(), c, less_fresh), c);
    }

    ActorId id_ = 0;
    KeyPair key_;
    size_t capacity_ = 1024;
    std::map<ActorId, PublicKey> server_pks_;
    std::map<ActorId, std::vector<Checkpoint>> lists_;
};

// --- client collection ------------------------------------------------------

struct WitnessResponse {
    ActorId witness_id = 0;
    std::vector<SignedCheckpoint> checkpoints;
};

/// Step C3. Discards entries failing either signature, groups byte-equal
/// checkpoint bodies, and among groups countersigned by at least Q distinct
/// witnesses (including any required subset) returns the freshest by
/// (size, timestamp). Returns nullopt when no group qualifies or the best
/// group does not advance the client's current checkpoint.
inline std::optional<Checkpoint> client_collect(std::span<const WitnessResponse> responses,
                                                const QuorumPolicy& policy,
                                                const std::map<ActorId, PublicKey>& witness_pks,
                                                const PublicKey& server_pk,
                                                const std::optional<Checkpoint>& current) {
    std::map<Bytes, std::set<ActorId>> groups;
    std::map<Bytes, Checkpoint> bodies;
    for (const WitnessResponse& resp : responses) {
        auto wpk = witness_pks.find(resp.witness_id);
        if (wpk == witness_pks.end()) continue;
        for (const SignedCheckpoint& sc : resp.checkpoints) {
            if (sc.witness_id != resp.witness_id) continue;
            if (!sc.verify(wpk->second)) continue;
            if (!sc.checkpoint.verify(server_pk)) continue;
            Bytes key = sc.checkpoint.serialize();
            groups[key].insert(resp.witness_id);
            bodies.emplace(key, sc.checkpoint);
        }
    }

    std::optional<Checkpoint> best;
    for (const auto& [key, ids] : groups) {
        if (ids.size() < policy.q) continue;
        if (!std::includes(ids.begin(), ids.end(), policy.required.begin(), policy.required.end()))
            continue;
        const Checkpoint& c = bodies.at(key);
        if (!best || c.size > best->size ||
            (c.size == best->size && c.timestamp > best->timestamp))
            best = c;
    }
    if (!best) return std::nullopt;
    if (current && best->size <= current->size) return std::nullopt;
    return best;
}

// --- message framing ----------------------------------------------------------

enum class MsgType : uint8_t {
    Offer = 1,
    NeedProof = 2,
    Proof = 3,
    CollectReq = 4,
    CollectResp = 5,
    AuditRecordMsg = 6,
};

/// 1-byte type, 4-byte big-endian body length, body.
inline Bytes encode_frame(MsgType type, const Bytes& body) {
    Bytes out;
    out.push_back(uint8_t(type));
    put_u32be(out, uint32_t(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

struct Frame {
    MsgType type;
    Bytes body;
};

inline std::optional<Frame> decode_frame(std::span<const uint8_t> in) {
    ByteReader r(in);
    uint8_t t = r.u8();
    uint32_t n = r.u32be();
    Bytes body = r.raw(n);
    if (!r.ok() || r.remaining() != 0) return std::nullopt;
    if (t < 1 || t > 6) return std::nullopt;
    return Frame{MsgType(t), std::move(body)};
}

/// Collection response: witness id, server id, count, then count 176-byte
/// signed-checkpoint bodies. Fixed framing overhead (frame header + ids +
/// count) is 11 bytes.
constexpr size_t kCollectRespFixedBytes = 1 + 4 + 2 + 2 + 2;

inline Bytes encode_collect_response(ActorId witness, ActorId server,
                                     std::span<const SignedCheckpoint> list) {
    Bytes body;
    put_u16be(body, witness);
    put_u16be(body, server);
    put_u16be(body, uint16_t(list.size()));
    for (const SignedCheckpoint& sc : list) {
        Bytes b = sc.body();
        body.insert(body.end(), b.begin(), b.end());
    }
    return encode_frame(MsgType::CollectResp, body);
}

inline std::optional<WitnessResponse> decode_collect_response(std::span<const uint8_t> frame,
                                                              ActorId* server_out = nullptr) {
    auto f = decode_frame(frame);
    if (!f || f->type != MsgType::CollectResp) return std::nullopt;
    ByteReader r(f->body);
    WitnessResponse resp;
    resp.witness_id = r.u16be();
    ActorId server = r.u16be();
    if (server_out) *server_out = server;
    uint16_t count = r.u16be();
    for (uint16_t i = 0; i < count; ++i) {
        Bytes body = r.raw(SignedCheckpoint::kBodyBytes);
        if (!r.ok()) return std::nullopt;
        auto sc = SignedCheckpoint::from_body(body, resp.witness_id);
        if (!sc) return std::nullopt;
        resp.checkpoints.push_back(*sc);
    }
    if (!r.ok() || r.remaining() != 0) return std::nullopt;
    return resp;
}

}  // namespace molog

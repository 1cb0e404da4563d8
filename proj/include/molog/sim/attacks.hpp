// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "molog/gossip.hpp"
#include "molog/log.hpp"
#include "molog/registry.hpp"
#include "molog/sim/config.hpp"
#include "molog/sim/rng.hpp"

namespace molog::sim {

// Security-game harness. The adversary plays the log/registry server (and up
// to F witnesses); clients and the remaining witnesses run the real
// verification code. Outcomes are evaluated with the real verifiers, so a
// "win" here is a genuine break of the protocol under the configured policy.

struct GameConfig {
    uint64_t n_witnesses = 7;
    uint64_t divisor_v = 3;
    uint64_t adversarial = 2;  // adversary-controlled witnesses
    uint64_t gamma = 8;

    enum Mode {
        kSafe,            // policy Q from the quorum bound
        kQBelowBound,     // client uses a quorum below the safe threshold
        kGossipDisabled,  // clients take the server's checkpoints on faith
        kReplayOnly,      // adversary never forks; predicate sanity check
    };
    Mode mode = kSafe;

    QuorumPolicy policy() const {
        QuorumPolicy p = QuorumPolicy::make(n_witnesses, divisor_v);
        if (mode == kQBelowBound) {
            // Largest quorum that violates 2Q > N_W + F: two such quorums
            // need no honest overlap, so the adversary can split the view.
            p.q = (n_witnesses + p.f) / 2;
        }
        return p;
    }
};

struct GameOutcome {
    bool won = false;
    std::string note;
};

namespace detail {

struct WitnessPool {
    std::vector<WitnessState> honest;          // index F..N_W-1 of the full set
    std::vector<KeyPair> adversarial_keys;     // the first F witness identities
    std::map<ActorId, PublicKey> pks;

    static WitnessPool make(const GameConfig& cfg, uint64_t seed, const PublicKey& server_pk) {
        WitnessPool pool;
        for (uint64_t w = 0; w < cfg.n_witnesses; ++w) {
            KeyPair kp = KeyPair::from_seed(key_seed(seed, 2, w));
            pool.pks[ActorId(w)] = kp.pk;
            if (w < cfg.adversarial) {
                pool.adversarial_keys.push_back(kp);
            } else {
                WitnessState ws(ActorId(w), kp);
                ws.register_server(0, server_pk);
                pool.honest.push_back(std::move(ws));
            }
        }
        return pool;
    }

    /// Offers a checkpoint chain to one honest witness, serving proofs from
    /// the supplied log.
    static void feed(WitnessState& w, const LogState& log, std::span<const Checkpoint> chain) {
        for (const Checkpoint& c : chain) {
            w.process_offer(0, c, [&](const std::optional<Checkpoint>& from, const Checkpoint& to)
                                      -> std::optional<RangeConsistencyProof> {
                uint64_t old_size = from ? from->size : 0;
                if (to.size > log.size() || old_size > to.size) return std::nullopt;
                return log.prove_append_sizes(old_size, to.size);
            });
        }
    }

    /// Assembles collection responses: honest witnesses serve their stored
    /// lists; adversarial witnesses countersign whatever chain the adversary
    /// pushes to this particular client.
    std::vector<WitnessResponse> collect(uint64_t gamma, std::span<const Checkpoint> adversary_chain) {
        std::vector<WitnessResponse> out;
        for (uint64_t a = 0; a < adversarial_keys.size(); ++a) {
            WitnessResponse r;
            r.witness_id = ActorId(a);
            size_t n = std::min<size_t>(gamma, adversary_chain.size());
            for (size_t i = 0; i < n; ++i) {
                const Checkpoint& c = adversary_chain[adversary_chain.size() - 1 - i];
                SignedCheckpoint sc;
                sc.checkpoint = c;
                sc.witness_signature = adversarial_keys[a].sign(c.serialize());
                sc.witness_id = ActorId(a);
                r.checkpoints.push_back(std::move(sc));
            }
            out.push_back(std::move(r));
        }
        for (WitnessState& w : honest) {
            WitnessResponse r;
            r.witness_id = w.id();
            r.checkpoints = w.collect(0, gamma);
            out.push_back(std::move(r));
        }
        return out;
    }
};

inline Entry numbered_entry(uint64_t seed, uint64_t tag, uint64_t i) {
    Bytes e;
    put_u64be(e, mix(seed, tag, i));
    put_u64be(e, i);
    return e;
}

}  // namespace detail

/// Split-view game (two clients, one of them a mirror holding the entries).
/// The adversary runs the log server, forks the log after a common prefix,
/// steers each honest witness onto one branch, and tries to get the client
/// to verify an entry under one branch while the mirror accepts the other.
inline GameOutcome attack_splitview(const GameConfig& cfg, uint64_t seed) {
    QuorumPolicy policy = cfg.policy();
    KeyPair server_key = KeyPair::from_seed(key_seed(seed, 1, 0));

    // Common prefix, then two branches. Branch A contains the target entry;
    // branch B replaces it and grows at least as large.
    uint64_t prefix_len = 1 + pick(5, seed, 10, kSaltScript);
    uint64_t extra_a = pick(3, seed, 11, kSaltScript);
    uint64_t extra_b = extra_a + pick(3, seed, 12, kSaltScript);

    LogState log_a, log_b;
    std::vector<Checkpoint> chain_prefix, chain_a, chain_b;
    uint64_t t = 1;
    for (uint64_t i = 0; i < prefix_len; ++i) {
        Entry e = detail::numbered_entry(seed, 1, i);
        std::vector<Entry> batch{e};
        Checkpoint c = log_a.append(batch, t, server_key);
        log_b.append(batch, t, server_key);
        ++t;
        chain_prefix.push_back(c);
    }

    Entry target = detail::numbered_entry(seed, 2, 0);
    Entry decoy = detail::numbered_entry(seed, 3, 0);
    bool fork = cfg.mode != GameConfig::kReplayOnly;
    {
        std::vector<Entry> ba{target};
        chain_a.push_back(log_a.append(ba, t, server_key));
        std::vector<Entry> bb{fork ? decoy : target};
        chain_b.push_back(log_b.append(bb, t, server_key));
        ++t;
    }
    for (uint64_t i = 0; i < extra_a; ++i) {
        std::vector<Entry> ba{detail::numbered_entry(seed, 4, i)};
        chain_a.push_back(log_a.append(ba, t++, server_key));
    }
    for (uint64_t i = 0; i < extra_b; ++i) {
        std::vector<Entry> bb{detail::numbered_entry(seed, 5, i)};
        chain_b.push_back(log_b.append(bb, t++, server_key));
    }

    detail::WitnessPool pool = detail::WitnessPool::make(cfg, seed, server_key.pk);

    // Everyone sees the prefix; honest witnesses then get split across the
    // branches as evenly as possible (the adversary's best move). Witnesses
    // locked onto one branch are also probed with the other: those offers
    // must fail and produce audit records.
    size_t audit_records = 0;
    for (size_t i = 0; i < pool.honest.size(); ++i) {
        WitnessState& w = pool.honest[i];
        detail::WitnessPool::feed(w, log_a, chain_prefix);
        bool to_a = (i % 2) == 0;
        detail::WitnessPool::feed(w, to_a ? log_a : log_b, to_a ? chain_a : chain_b);
        if (fork) {
            const LogState& other = to_a ? log_b : log_a;
            const auto& other_chain = to_a ? chain_b : chain_a;
            for (const Checkpoint& c : other_chain) {
                auto res = w.process_offer(0, c, [&](const std::optional<Checkpoint>& from,
                                                     const Checkpoint& to)
                                                     -> std::optional<RangeConsistencyProof> {
                    uint64_t old_size = from ? from->size : 0;
                    if (to.size > other.size() || old_size > to.size) return std::nullopt;
                    return other.prove_append_sizes(old_size, to.size);
                });
                if (res.audit) ++audit_records;
            }
        }
    }

    // Collection. The adversary serves branch A to the client and branch B
    // to the mirror; honest witnesses answer from their stores.
    std::optional<Checkpoint> client_cp, mirror_cp;
    if (cfg.mode == GameConfig::kGossipDisabled) {
        client_cp = chain_a.back();
        mirror_cp = chain_b.back();
        if (!client_cp->verify(server_key.pk)) client_cp.reset();
        if (!mirror_cp->verify(server_key.pk)) mirror_cp.reset();
    } else {
        auto resp_client = pool.collect(cfg.gamma, chain_a);
        client_cp = client_collect(resp_client, policy, pool.pks, server_key.pk, std::nullopt);
        auto resp_mirror = pool.collect(cfg.gamma, chain_b);
        mirror_cp = client_collect(resp_mirror, policy, pool.pks, server_key.pk, std::nullopt);
    }

    GameOutcome out;
    if (!client_cp || !mirror_cp) {
        out.note = "no quorum on one side";
        return out;
    }

    // Winning predicate, evaluated with the real verifiers:
    //  (1) the client verified the target entry under its checkpoint,
    //  (2) the mirror accepted a checkpoint of version >= the client's,
    //  (3) that checkpoint commits to an entry list not containing the entry.
    bool incl_ok = false;
    if (client_cp->size > prefix_len && log_a.root_at(client_cp->size) == client_cp->root) {
        auto [idx, proof] = log_a.prove_incl(target);
        incl_ok = bool(verify_inclusion(client_cp->root, client_cp->size, leaf_hash(target), idx,
                                        proof)) &&
                  idx < client_cp->size;
    }
    std::vector<Entry> mirror_entries(log_b.entries().begin(),
                                      log_b.entries().begin() + long(mirror_cp->size));
    bool mirror_ok = mirror_cp->size <= log_b.size() &&
                     LogState::ver_com(*mirror_cp, mirror_entries);
    bool version_ok = mirror_cp->size >= client_cp->size;
    bool absent = std::find(mirror_entries.begin(), mirror_entries.end(), target) ==
                  mirror_entries.end();

    out.won = incl_ok && mirror_ok && version_ok && absent;
    if (fork && audit_records == 0 && cfg.mode == GameConfig::kSafe)
        out.note = "fork produced no audit records";
    return out;
}

/// Oscillation game over a real registry pair. One client performs a lookup
/// of the target key, another audits the same key from an honestly obtained
/// older state; the adversary forks the registry so the looked-up value is
/// missing from the audited history, and tries to get both proofs accepted.
inline GameOutcome attack_oscillation(const GameConfig& cfg, uint64_t seed) {
    QuorumPolicy policy = cfg.policy();
    KeyPair server_key = KeyPair::from_seed(key_seed(seed, 1, 1));

    Bytes target_key = str_bytes("target-key");
    auto value_bytes = [&](uint64_t tag, uint64_t i) {
        Bytes v;
        put_u64be(v, mix(seed, 0x7a1, tag, i));
        return v;
    };

    // Common history: a few versions touching the target key and some noise
    // keys, fully shared between the forks.
    Registry common(server_key, 0);
    uint64_t common_versions = 2 + pick(3, seed, 20, kSaltScript);
    uint64_t t = 1;
    std::vector<Checkpoint> chain_common;
    for (uint64_t v = 0; v < common_versions; ++v) {
        std::vector<Registry::AppendPair> batch;
        if (v == 0 || pick(2, seed, 21, v, kSaltScript) == 0)
            batch.push_back({target_key, value_bytes(1, v)});
        batch.push_back({str_bytes("noise-" + std::to_string(v)), value_bytes(2, v)});
        chain_common.push_back(common.append(batch, t++));
    }

    // The audit client honestly obtains its history representation at the
    // common head (this is chkpt_0 in the game).
    HistRep hist_old = empty_hist_rep(common.checkpoint_at(0));
    {
        auto hr = common.hist(target_key, hist_old);
        auto res = ver_hist(hr.checkpoint, target_key, hist_old, hr.new_values, hr.proof);
        if (!res.verdict) return {false, "setup: honest hist rejected"};
        hist_old = res.updated;
    }
    std::vector<Bytes> old_history = *common.history(target_key);

    // Fork A appends the lie; fork B keeps the target key untouched and
    // outgrows A so the version ordering constraint can hold.
    bool forked = cfg.mode != GameConfig::kReplayOnly;
    Registry fork_a = common;
    Registry fork_b = common;
    Bytes val_lie = str_bytes("lie-value");
    std::vector<Checkpoint> chain_a, chain_b;
    chain_a.push_back(fork_a.append_one(target_key, forked ? val_lie : value_bytes(1, 99), t));
    {
        std::vector<Registry::AppendPair> batch;
        if (forked)
            batch.push_back({str_bytes("noise-b0"), value_bytes(3, 0)});
        else
            batch.push_back({target_key, value_bytes(1, 99)});
        chain_b.push_back(fork_b.append(batch, t));
    }
    ++t;
    uint64_t pad = 1 + pick(2, seed, 22, kSaltScript);
    for (uint64_t i = 0; i < pad; ++i)
        chain_b.push_back(fork_b.append_one(str_bytes("noise-b" + std::to_string(i + 1)),
                                            value_bytes(4, i), t++));

    detail::WitnessPool pool = detail::WitnessPool::make(cfg, seed, server_key.pk);

    // The MRL is the gossiped log here. Witnesses verify consistency against
    // the registry's MRL exactly as against any other verifiable log.
    auto feed_registry = [&](WitnessState& w, const Registry& reg,
                             std::span<const Checkpoint> chain) {
        for (const Checkpoint& c : chain) {
            w.process_offer(0, c, [&](const std::optional<Checkpoint>& from, const Checkpoint& to)
                                      -> std::optional<RangeConsistencyProof> {
                uint64_t old_size = from ? from->size : 0;
                if (to.size > reg.head_version() || old_size > to.size) return std::nullopt;
                return reg.prove_mrl_append(old_size, to.size);
            });
        }
    };

    for (size_t i = 0; i < pool.honest.size(); ++i) {
        WitnessState& w = pool.honest[i];
        feed_registry(w, common, chain_common);
        if ((i % 2) == 0)
            feed_registry(w, fork_a, chain_a);
        else
            feed_registry(w, fork_b, chain_b);
    }

    std::optional<Checkpoint> chkpt1, chkpt2;
    if (cfg.mode == GameConfig::kGossipDisabled) {
        chkpt1 = chain_a.back();
        chkpt2 = chain_b.back();
    } else {
        auto resp1 = pool.collect(cfg.gamma, chain_a);
        chkpt1 = client_collect(resp1, policy, pool.pks, server_key.pk, std::nullopt);
        auto resp2 = pool.collect(cfg.gamma, chain_b);
        chkpt2 = client_collect(resp2, policy, pool.pks, server_key.pk, std::nullopt);
    }

    GameOutcome out;
    if (!chkpt1 || !chkpt2) {
        out.note = "no quorum on one side";
        return out;
    }

    // Adversary serves the lookup from fork A and the audit from fork B.
    auto lr = fork_a.lookup(target_key);
    bool lookup_ok = chkpt1->root == fork_a.head_checkpoint().root &&
                     bool(ver_lookup(*chkpt1, target_key, lr.value, lr.proof));

    bool audit_ok = false;
    std::vector<Bytes> audited_hist;
    if (chkpt2->root == fork_b.head_checkpoint().root) {
        auto ar = fork_b.audit(target_key, hist_old);
        auto res = ver_audit(*chkpt2, target_key, hist_old, ar.new_values, ar.proof,
                             &server_key.pk);
        audit_ok = bool(res.verdict);
        audited_hist = ar.new_values;
    }

    bool versions_ok = hist_old.version() <= chkpt1->size && chkpt1->size <= chkpt2->size;
    Bytes val = lr.value ? *lr.value : Bytes{};
    bool val_not_latest_old = old_history.empty() || val != old_history.back();
    bool val_absent = std::find(audited_hist.begin(), audited_hist.end(), val) ==
                      audited_hist.end();

    out.won = lookup_ok && audit_ok && versions_ok && val_not_latest_old && val_absent;
    return out;
}

}  // namespace molog::sim

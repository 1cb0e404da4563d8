// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <vector>

#include "molog/gossip.hpp"
#include "molog/log.hpp"
#include "molog/sim/config.hpp"
#include "molog/sim/csv.hpp"
#include "molog/sim/events.hpp"
#include "molog/sim/rng.hpp"

namespace molog::sim {

struct PhaseResult {
    double mean_ms = 0;        // end-to-end time, averaged over runs
    double mean_bytes = 0;     // wire bytes, averaged over runs
    double mean_attempts = 1;  // rounds until success
    std::vector<CsvRow> rows;
};

namespace detail {

// Frame sizes for the fixed-size messages. Offer: server id + checkpoint.
// NeedProof: witness id + freshest checkpoint (or zero size for none).
// CollectReq: server id + gamma.
inline size_t offer_frame_bytes() { return 1 + 4 + 2 + Checkpoint::kWireBytes; }
inline size_t need_proof_frame_bytes() { return 1 + 4 + 2 + Checkpoint::kWireBytes; }
inline size_t collect_req_frame_bytes() { return 1 + 4 + 2 + 2; }

inline size_t proof_frame_bytes(const RangeConsistencyProof& p) {
    Bytes body;
    p.encode(body);
    return 1 + 4 + body.size();
}

}  // namespace detail

/// Broadcast phase: one server pushes one new checkpoint until Q witnesses
/// have verified and stored it. Witness availability is drawn per delivery;
/// the server retries the full exchange with the still-missing witnesses
/// after each round, up to retry_cap.
inline PhaseResult run_broadcast_latency(const SimConfig& config) {
    PhaseResult out;
    double total_ms = 0, total_bytes = 0, total_attempts = 0;

    // A desk-scale log standing in for the server's MRL; proofs are real so
    // the byte accounting is exact.
    LogState log;
    KeyPair server_key = KeyPair::from_seed(key_seed(config.seed, 1, 0));
    std::vector<Entry> history;
    for (uint64_t i = 0; i + 1 < std::min<uint64_t>(config.history_len, 256); ++i) {
        Bytes e;
        put_u64be(e, i);
        history.push_back(e);
    }
    log.append(history, 0, server_key);
    uint64_t old_size = log.size();
    Bytes last;
    put_u64be(last, old_size);
    std::vector<Entry> batch{last};
    log.append(batch, 1, server_key);
    RangeConsistencyProof proof = log.prove_append_sizes(old_size, log.size());

    for (uint64_t run = 0; run < config.runs; ++run) {
        uint64_t run_seed = mix(config.seed, run, 0xb04d);
        EventLoop loop;
        uint64_t accepted = 0;
        double done_at = -1;
        uint64_t attempts_used = 0;
        std::vector<uint8_t> has(config.n_witnesses, 0);

        std::function<void(uint64_t, double)> attempt = [&](uint64_t a, double start) {
            if (done_at >= 0 || a > config.retry_cap) return;
            attempts_used = a + 1;
            for (uint64_t w = config.f; w < config.n_witnesses; ++w) {
                if (has[w]) continue;
                bool offer_ok = chance(config.p_offer(), run_seed, w, a, kSaltOffer);
                bool proof_ok = chance(config.p_proof(), run_seed, w, a, kSaltProof);
                loop.send(start, config.latency_ms, detail::offer_frame_bytes(), "server", "offer",
                          [&, w, a, offer_ok, proof_ok, start] {
                    if (!offer_ok) return;
                    double t1 = start + config.latency_ms + config.witness_proc_ms;
                    loop.send(t1, config.latency_ms, detail::need_proof_frame_bytes(), "witness",
                              "need_proof", [&, w, proof_ok, t1] {
                        double t2 = t1 + config.latency_ms;
                        loop.send(t2, config.latency_ms, detail::proof_frame_bytes(proof), "server",
                                  "proof", [&, w, proof_ok, t2] {
                            if (!proof_ok) return;
                            double t3 = t2 + config.latency_ms + config.witness_proc_ms;
                            if (has[w]) return;
                            has[w] = 1;
                            ++accepted;
                            if (accepted >= config.q && done_at < 0) done_at = t3;
                        });
                    });
                });
            }
            // Server learns the round outcome one latency after the last
            // possible accept and re-offers to whoever is missing.
            double round_end = start + 3 * config.latency_ms + 2 * config.witness_proc_ms +
                               config.latency_ms;
            loop.at(round_end, "server", "retry_check", [&, a, round_end] {
                if (done_at < 0 && accepted < config.q) attempt(a + 1, round_end);
            });
        };
        attempt(0, 0.0);
        loop.run();

        if (done_at < 0) done_at = loop.now();
        total_ms += done_at;
        total_bytes += double(loop.bytes_on_wire());
        total_attempts += double(attempts_used);
        out.rows.push_back({config.name, config.seed, 0, "broadcast_ms_run" + std::to_string(run),
                            done_at});
    }

    out.mean_ms = total_ms / double(config.runs);
    out.mean_bytes = total_bytes / double(config.runs);
    out.mean_attempts = total_attempts / double(config.runs);
    out.rows.push_back({config.name, config.seed, 0, "broadcast_ms", out.mean_ms});
    out.rows.push_back({config.name, config.seed, 0, "broadcast_bytes", out.mean_bytes});
    out.rows.push_back({config.name, config.seed, 0, "broadcast_attempts", out.mean_attempts});
    return out;
}

/// Collection phase: one client asks every witness for its gamma freshest
/// checkpoints of one server and stops once a quorum group emerges. Witness
/// stores are drawn from the same storage model as the liveness runs, so
/// response sizes (11 + 176 * count bytes) and the success condition are
/// consistent with them.
inline PhaseResult run_collection_latency(const SimConfig& config) {
    PhaseResult out;
    double total_ms = 0, total_bytes = 0, total_attempts = 0;
    const uint64_t T = config.history_len;

    for (uint64_t run = 0; run < config.runs; ++run) {
        uint64_t run_seed = mix(config.seed, run, 0xc011);
        const uint64_t s = 0;

        std::vector<std::vector<uint32_t>> stored(config.n_witnesses);
        for (uint64_t w = config.f; w < config.n_witnesses; ++w)
            for (uint64_t b = 0; b < T; ++b)
                if (chance(config.p_offer(), run_seed, s, w, b, kSaltOffer) &&
                    chance(config.p_proof(), run_seed, s, w, b, kSaltProof))
                    stored[w].push_back(uint32_t(b));

        EventLoop loop;
        double done_at = -1;
        uint64_t attempts_used = 0;

        std::function<void(uint64_t, double)> round = [&](uint64_t a, double start) {
            if (done_at >= 0 || a > config.retry_cap) return;
            attempts_used = a + 1;
            auto support = std::make_shared<std::vector<uint16_t>>(T, 0);
            auto responses = std::make_shared<uint64_t>(0);
            uint64_t expected = 0;
            for (uint64_t w = config.f; w < config.n_witnesses; ++w)
                if (chance(config.p_collect(), run_seed, a, s, w, kSaltCollect)) ++expected;

            // The client cannot tell witnesses apart; it broadcasts to all
            // of them. Adversarial ones (ids below F) stay silent.
            for (uint64_t w = 0; w < config.n_witnesses; ++w) {
                bool up = w >= config.f &&
                          chance(config.p_collect(), run_seed, a, s, w, kSaltCollect);
                loop.send(start, config.latency_ms, detail::collect_req_frame_bytes(), "client",
                          "collect_req", [&, w, up, start, support, responses, expected] {
                    if (!up) return;
                    size_t count = std::min<size_t>(config.gamma, stored[w].size());
                    size_t resp_bytes = kCollectRespFixedBytes + SignedCheckpoint::kBodyBytes * count;
                    double t1 = start + config.latency_ms + config.witness_proc_ms;
                    loop.send(t1, config.latency_ms, resp_bytes, "witness", "collect_resp",
                              [&, w, count, t1, support, responses, expected] {
                        for (size_t i = stored[w].size() - count; i < stored[w].size(); ++i)
                            ++(*support)[stored[w][i]];
                        ++*responses;
                        if (*responses == expected) {
                            double t2 = t1 + config.latency_ms + config.client_proc_ms;
                            uint16_t best = 0;
                            for (uint16_t v : *support) best = std::max(best, v);
                            if (best >= config.q) {
                                if (done_at < 0) done_at = t2;
                            } else {
                                round(uint64_t(attempts_used), t2);
                            }
                        }
                    });
                });
            }
            if (expected == 0) {
                double t2 = start + 2 * config.latency_ms + config.client_proc_ms;
                loop.at(t2, "client", "empty_round", [&, t2] { round(uint64_t(attempts_used), t2); });
            }
        };
        round(0, 0.0);
        loop.run();

        if (done_at < 0) done_at = loop.now();
        total_ms += done_at;
        total_bytes += double(loop.bytes_on_wire());
        total_attempts += double(attempts_used);
        out.rows.push_back({config.name, config.seed, config.gamma,
                            "collection_ms_run" + std::to_string(run), done_at});
    }

    out.mean_ms = total_ms / double(config.runs);
    out.mean_bytes = total_bytes / double(config.runs);
    out.mean_attempts = total_attempts / double(config.runs);
    out.rows.push_back({config.name, config.seed, config.gamma, "collection_ms", out.mean_ms});
    out.rows.push_back({config.name, config.seed, config.gamma, "collection_bytes", out.mean_bytes});
    out.rows.push_back({config.name, config.seed, config.gamma, "collection_attempts",
                        out.mean_attempts});
    return out;
}

}  // namespace molog::sim

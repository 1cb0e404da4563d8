// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <vector>

#include "molog/sim/config.hpp"
#include "molog/sim/csv.hpp"
#include "molog/sim/rng.hpp"

namespace molog::sim {

// One-request collection round, repeated over servers, clients and runs.
//
// Per run each server has broadcast `history_len` checkpoints. A witness
// stores broadcast b iff the offer survived its ingest stage and both the
// offer and the consistency-proof deliveries found it up (independent
// Bernoulli per message). On collection, an up witness returns its gamma
// freshest stored checkpoints for the server; the first F witnesses are
// adversarial and stay silent, which is the worst case for liveness. A
// (client, server) pair succeeds when some checkpoint is returned by at
// least Q distinct witnesses.
//
// All draws are keyed by identity, never by gamma, so the consensus
// fraction is non-decreasing in gamma realization by realization.

struct LivenessResult {
    // per (gamma, run) consensus fraction plus per-gamma mean
    std::vector<CsvRow> rows;
    // mean fraction per gamma, index-aligned with the gamma argument
    std::vector<double> mean_fraction;
};

inline LivenessResult run_liveness(const SimConfig& config, std::span<const uint64_t> gammas) {
    LivenessResult out;
    const uint64_t T = config.history_len;
    const uint64_t W = config.n_witnesses;
    const uint64_t F = config.f;
    const double p_resp = config.p_collect();
    const uint64_t servers = std::min(config.sim_servers, config.n_servers);
    const uint64_t clients = std::min(config.sim_clients, config.n_clients);

    std::vector<double> sum(gammas.size(), 0.0);

    for (uint64_t run = 0; run < config.runs; ++run) {
        uint64_t run_seed = mix(config.seed, run, 0x11f3);
        std::vector<double> succ(gammas.size(), 0.0);

        for (uint64_t s = 0; s < servers; ++s) {
            // Stored broadcast indices per witness, oldest to newest.
            std::vector<std::vector<uint32_t>> stored(W);
            for (uint64_t w = F; w < W; ++w) {
                for (uint64_t b = 0; b < T; ++b) {
                    bool kept = chance(config.p_offer(), run_seed, s, w, b, kSaltOffer) &&
                                chance(config.p_proof(), run_seed, s, w, b, kSaltProof);
                    if (kept) stored[w].push_back(uint32_t(b));
                }
            }

            for (uint64_t c = 0; c < clients; ++c) {
                std::vector<uint8_t> up(W, 0);
                for (uint64_t w = F; w < W; ++w)
                    up[w] = chance(p_resp, run_seed, c, s, w, kSaltCollect) ? 1 : 0;

                for (size_t gi = 0; gi < gammas.size(); ++gi) {
                    uint64_t gamma = gammas[gi];
                    std::vector<uint16_t> support(T, 0);
                    uint16_t best = 0;
                    for (uint64_t w = F; w < W; ++w) {
                        if (!up[w] || stored[w].empty()) continue;
                        size_t n = std::min<size_t>(gamma, stored[w].size());
                        for (size_t i = stored[w].size() - n; i < stored[w].size(); ++i)
                            best = std::max(best, ++support[stored[w][i]]);
                    }
                    if (best >= config.q) succ[gi] += 1.0;
                }
            }
        }

        double pairs = double(servers) * double(clients);
        for (size_t gi = 0; gi < gammas.size(); ++gi) {
            double frac = succ[gi] / pairs;
            sum[gi] += frac;
            out.rows.push_back({config.name, config.seed, gammas[gi], "consensus_fraction_run" +
                                std::to_string(run), frac});
        }
    }

    for (size_t gi = 0; gi < gammas.size(); ++gi) {
        double mean = sum[gi] / double(config.runs);
        out.mean_fraction.push_back(mean);
        out.rows.push_back({config.name, config.seed, gammas[gi], "consensus_fraction", mean});
    }
    return out;
}

}  // namespace molog::sim

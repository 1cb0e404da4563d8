// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: verifiable-log and compact-range operations,
// registry queries with client-state tracking, in-process witness
// interactions, and the simulator.
//
// Exit codes: 0 success/accept, 1 verification reject, 2 usage or IO error.

#include <CLI11.hpp>

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "molog/gossip.hpp"
#include "molog/log.hpp"
#include "molog/registry.hpp"
#include "molog/sim/attacks.hpp"
#include "molog/sim/config.hpp"
#include "molog/sim/csv.hpp"
#include "molog/sim/latency.hpp"
#include "molog/sim/liveness.hpp"

namespace fs = std::filesystem;
using namespace molog;

namespace {

bool g_explain = false;

int reject(const std::string& reason) {
    if (g_explain)
        std::cerr << "reject: " << reason << "\n";
    else
        std::cerr << "reject\n";
    return 1;
}

int accept() {
    std::cout << "accept\n";
    return 0;
}

[[noreturn]] void fail(const std::string& msg) { throw Error(Errc::IoError, msg); }

// --- framed proof artifacts (tag, u32 length, body; text form is base64) ---

enum ProofTag : uint8_t {
    kTagInclusion = 1,
    kTagConsistency = 2,
    kTagLookup = 3,
    kTagHist = 4,
    kTagAudit = 5,
};

Bytes frame_proof(uint8_t tag, const Bytes& body) {
    Bytes out;
    out.push_back(tag);
    put_u32be(out, uint32_t(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::optional<std::pair<uint8_t, Bytes>> unframe_proof(const Bytes& in) {
    ByteReader r(in);
    uint8_t tag = r.u8();
    uint32_t n = r.u32be();
    Bytes body = r.raw(n);
    if (!r.ok() || r.remaining() != 0) return std::nullopt;
    return std::make_pair(tag, std::move(body));
}

std::string slurp(const std::string& path) {
    if (path == "-") {
        std::ostringstream os;
        os << std::cin.rdbuf();
        return os.str();
    }
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void spit(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        return;
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail("cannot write " + path);
    os << data;
}

Bytes read_b64_artifact(const std::string& path_or_b64) {
    std::string text =
        (path_or_b64 == "-" || fs::exists(path_or_b64)) ? slurp(path_or_b64) : path_or_b64;
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    Bytes raw;
    if (!from_base64(text, raw)) fail("invalid base64 artifact");
    return raw;
}

void write_b64_artifact(const std::string& path, const Bytes& raw) {
    spit(path, to_base64(raw) + "\n");
}

Checkpoint read_checkpoint(const std::string& arg) {
    Bytes raw = read_b64_artifact(arg);
    auto c = Checkpoint::deserialize(raw);
    if (!c) fail("not a 112-byte checkpoint");
    return *c;
}

Bytes parse_entry(const std::string& text, bool is_hex) {
    if (!is_hex) return str_bytes(text);
    Bytes out;
    if (!from_hex(text, out)) fail("invalid hex entry");
    return out;
}

uint64_t now_or(uint64_t t) { return t ? t : uint64_t(std::time(nullptr)); }

// --- log directory state ----------------------------------------------------

struct LogDir {
    fs::path dir;
    KeyPair key;
    LogState log;

    static LogDir open_or_init(const std::string& path) {
        LogDir d;
        d.dir = path;
        fs::create_directories(d.dir);
        fs::path keyfile = d.dir / "server.key";
        if (fs::exists(keyfile)) {
            std::string raw = slurp(keyfile.string());
            if (raw.size() != 96) fail("corrupt server.key");
            std::copy(raw.begin(), raw.begin() + 64, d.key.sk.begin());
            std::copy(raw.begin() + 64, raw.end(), d.key.pk.begin());
        } else {
            d.key = KeyPair::generate();
            std::string raw(d.key.sk.begin(), d.key.sk.end());
            raw.append(d.key.pk.begin(), d.key.pk.end());
            spit(keyfile.string(), raw);
        }
        fs::path entries = d.dir / "entries.log";
        if (fs::exists(entries)) d.log = LogState::load_entries(entries);
        return d;
    }

    void save() { log.save_entries(dir / "entries.log"); }
};

NodeDigestFn synthetic_digests(LogState& scratch, uint64_t n) {
    for (uint64_t i = scratch.size(); i < n; ++i) {
        Bytes e;
        put_u64be(e, i);
        scratch.append_entry(e);
    }
    return scratch.digests();
}

CompactRange read_range_file(const std::string& path) {
    // Text node lines "height index hexdigest"; endpoints from the covers.
    std::istringstream is(slurp(path));
    CompactRange r;
    uint64_t h, i;
    std::string hex;
    while (is >> h >> i >> hex) {
        Digest d;
        if (!digest_from_hex(hex, d)) fail("bad digest in " + path);
        r.nodes.emplace_back(NodeId{h, i}, d);
    }
    if (!r.nodes.empty()) {
        r.lo = r.nodes.front().first.cover_lo();
        r.hi = r.nodes.back().first.cover_hi();
    }
    if (!r.well_formed()) fail("node list is not a compact range: " + path);
    return r;
}

// --- per-command context ------------------------------------------------------

struct Ctx {
    std::string log_dir;
    std::vector<std::string> entries;
    bool entries_hex = false;
    uint64_t timestamp = 0;
    uint64_t index = UINT64_MAX;
    uint64_t old_size = 0, new_size = 0;
    std::string checkpoint_arg, old_arg, new_arg, proof_arg, out;
    std::string server_pub;
    uint64_t size = 0, lo = 0, hi = 0;
    std::vector<std::string> range_files;
    std::string reg_dir, key_str, value_str, state_file, out_state, batch_file;
    bool value_hex = false;
    std::string witness_dir;
    uint64_t server_id = 0, gamma = 0;
    std::string setting = "ct", phase = "collection", game = "splitview", mode = "safe";
    std::string sim_out, config_file;
    uint64_t seed = 1, runs = 5, seeds = 100;
    std::string gamma_range;
};

int cmd_log_append(Ctx& c) {
    LogDir d = LogDir::open_or_init(c.log_dir);
    std::vector<Entry> batch;
    for (const auto& e : c.entries) batch.push_back(parse_entry(e, c.entries_hex));
    Checkpoint cp = d.log.append(batch, now_or(c.timestamp), d.key);
    d.save();
    write_b64_artifact(c.out, cp.serialize());
    return 0;
}

int cmd_log_prove_incl(Ctx& c) {
    LogDir d = LogDir::open_or_init(c.log_dir);
    uint64_t idx = c.index;
    if (idx == UINT64_MAX) {
        if (c.entries.empty()) fail("need --index or --entry");
        auto found = d.log.find(parse_entry(c.entries[0], c.entries_hex));
        if (!found) fail("entry not found in log");
        idx = *found;
    }
    RangeInclusionProof proof = d.log.prove_incl_at(idx);
    Bytes body;
    put_u64be(body, idx);
    put_u64be(body, d.log.size());
    proof.encode(body);
    write_b64_artifact(c.out, frame_proof(kTagInclusion, body));
    return 0;
}

int cmd_log_verify_incl(Ctx& c) {
    Checkpoint cp = read_checkpoint(c.checkpoint_arg);
    if (!c.server_pub.empty()) {
        Bytes pk;
        if (!from_hex(c.server_pub, pk) || pk.size() != 32) fail("bad --server-pub");
        PublicKey p{};
        std::copy(pk.begin(), pk.end(), p.begin());
        if (!cp.verify(p)) return reject("checkpoint signature");
    }
    auto framed = unframe_proof(read_b64_artifact(c.proof_arg));
    if (!framed || framed->first != kTagInclusion) fail("not an inclusion proof");
    ByteReader r(framed->second);
    uint64_t idx = r.u64be();
    uint64_t tree_size = r.u64be();
    auto proof = RangeInclusionProof::decode(r);
    if (!proof || !r.ok()) fail("malformed inclusion proof");
    if (tree_size != cp.size) return reject("proof tree size vs checkpoint");
    if (c.entries.empty()) fail("need --entry");
    Digest leaf = leaf_hash(parse_entry(c.entries[0], c.entries_hex));
    Verdict v = verify_inclusion(cp.root, cp.size, leaf, idx, *proof);
    return v ? accept() : reject(v.reason);
}

int cmd_log_prove_append(Ctx& c) {
    LogDir d = LogDir::open_or_init(c.log_dir);
    uint64_t old_n = c.old_size, new_n = c.new_size ? c.new_size : d.log.size();
    if (!c.old_arg.empty()) old_n = read_checkpoint(c.old_arg).size;
    if (!c.new_arg.empty()) new_n = read_checkpoint(c.new_arg).size;
    RangeConsistencyProof proof = d.log.prove_append_sizes(old_n, new_n);
    Bytes body;
    put_u64be(body, old_n);
    put_u64be(body, new_n);
    proof.encode(body);
    write_b64_artifact(c.out, frame_proof(kTagConsistency, body));
    return 0;
}

int cmd_log_verify_append(Ctx& c) {
    Checkpoint old_cp = read_checkpoint(c.old_arg);
    Checkpoint new_cp = read_checkpoint(c.new_arg);
    auto framed = unframe_proof(read_b64_artifact(c.proof_arg));
    if (!framed || framed->first != kTagConsistency) fail("not a consistency proof");
    ByteReader r(framed->second);
    uint64_t old_n = r.u64be();
    uint64_t new_n = r.u64be();
    auto proof = RangeConsistencyProof::decode(r);
    if (!proof || !r.ok()) fail("malformed consistency proof");
    if (old_n != old_cp.size || new_n != new_cp.size) return reject("proof sizes vs checkpoints");
    Verdict v = verify_consistency(old_cp.root, old_cp.size, new_cp.root, new_cp.size, *proof);
    return v ? accept() : reject(v.reason);
}

int cmd_range_compute(Ctx& c) {
    LogState scratch;
    CompactRange r;
    if (!c.log_dir.empty()) {
        LogDir d = LogDir::open_or_init(c.log_dir);
        r = compute_range(c.size ? c.size : d.log.size(), c.lo, c.hi, d.log.digests());
    } else {
        r = compute_range(c.size, c.lo, c.hi, synthetic_digests(scratch, c.size));
    }
    spit(c.out, r.to_text());
    return 0;
}

int cmd_range_merge(Ctx& c) {
    std::vector<CompactRange> parts;
    for (const auto& f : c.range_files) parts.push_back(read_range_file(f));
    CompactRange merged = merge(std::span<const CompactRange>(parts));
    spit(c.out, merged.to_text());
    return 0;
}

int cmd_range_root(Ctx& c) {
    if (c.range_files.empty()) fail("need a range file");
    CompactRange r = read_range_file(c.range_files[0]);
    std::cout << to_hex(range_to_root(r)) << "\n";
    return 0;
}

// --- registry ---------------------------------------------------------------

HistRep read_state(const std::string& path, const Registry* reg,
                   const std::string& genesis_arg = "") {
    if (!path.empty() && fs::exists(path)) {
        Bytes raw = read_b64_artifact(path);
        ByteReader r(raw);
        auto h = HistRep::decode(r);
        if (!h) fail("corrupt state file " + path);
        return *h;
    }
    if (!genesis_arg.empty()) return empty_hist_rep(read_checkpoint(genesis_arg));
    if (!reg) fail("no state yet: pass --genesis for the bootstrap round");
    return empty_hist_rep(reg->checkpoint_at(0));
}

void write_state(const std::string& path, const HistRep& rep) {
    if (path.empty()) return;
    Bytes out;
    rep.encode(out);
    write_b64_artifact(path, out);
}

int cmd_registry_init(Ctx& c) {
    if (fs::exists(fs::path(c.reg_dir) / "checkpoints.bin")) fail("registry already exists");
    Registry reg(KeyPair::generate(), now_or(c.timestamp));
    reg.save(c.reg_dir);
    std::cout << reg.head_checkpoint().to_base64() << "\n";
    return 0;
}

int cmd_registry_append(Ctx& c) {
    Registry reg = Registry::load(c.reg_dir);
    std::vector<Registry::AppendPair> batch;
    if (!c.batch_file.empty()) {
        // One "key<TAB>hexvalue" pair per line.
        std::istringstream is(slurp(c.batch_file));
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) fail("batch line missing tab: " + line);
            Bytes val;
            if (!from_hex(line.substr(tab + 1), val)) fail("bad hex value in batch");
            batch.push_back({str_bytes(line.substr(0, tab)), val});
        }
    } else {
        if (c.key_str.empty()) fail("need --key/--value or --batch");
        batch.push_back({str_bytes(c.key_str), parse_entry(c.value_str, c.value_hex)});
    }
    Checkpoint cp = reg.append(batch, now_or(c.timestamp));
    reg.save(c.reg_dir);
    std::cout << cp.to_base64() << "\n";
    return 0;
}

int cmd_registry_lookup(Ctx& c) {
    Registry reg = Registry::load(c.reg_dir);
    auto lr = reg.lookup(str_bytes(c.key_str));
    Bytes body;
    body.push_back(lr.value ? 1 : 0);
    if (lr.value) {
        put_u32be(body, uint32_t(lr.value->size()));
        body.insert(body.end(), lr.value->begin(), lr.value->end());
    }
    lr.proof.encode(body);
    write_b64_artifact(c.out, frame_proof(kTagLookup, body));
    if (lr.value)
        std::cerr << "value " << to_hex(std::span<const uint8_t>(*lr.value)) << "\n";
    else
        std::cerr << "absent\n";
    std::cout << reg.head_checkpoint().to_base64() << "\n";
    return 0;
}

int cmd_registry_verify_lookup(Ctx& c) {
    Checkpoint cp = read_checkpoint(c.checkpoint_arg);
    auto framed = unframe_proof(read_b64_artifact(c.proof_arg));
    if (!framed || framed->first != kTagLookup) fail("not a lookup proof");
    ByteReader r(framed->second);
    bool has_value = r.u8() != 0;
    std::optional<Bytes> value;
    if (has_value) {
        uint32_t n = r.u32be();
        value = r.raw(n);
    }
    auto proof = LookupProof::decode(r);
    if (!proof || !r.ok()) fail("malformed lookup proof");
    if (!c.value_str.empty()) value = parse_entry(c.value_str, c.value_hex);
    Verdict v = ver_lookup(cp, str_bytes(c.key_str), value, *proof);
    return v ? accept() : reject(v.reason);
}

Bytes encode_hist_artifact(const std::vector<Bytes>& values, const HistProof& proof) {
    Bytes body;
    put_u32be(body, uint32_t(values.size()));
    for (const Bytes& v : values) {
        put_u32be(body, uint32_t(v.size()));
        body.insert(body.end(), v.begin(), v.end());
    }
    proof.encode(body);
    return frame_proof(kTagHist, body);
}

int cmd_registry_hist(Ctx& c) {
    Registry reg = Registry::load(c.reg_dir);
    HistRep rep = read_state(c.state_file, &reg);
    auto hr = reg.hist(str_bytes(c.key_str), rep);
    write_b64_artifact(c.out, encode_hist_artifact(hr.new_values, hr.proof));
    std::cout << hr.checkpoint.to_base64() << "\n";
    return 0;
}

int cmd_registry_verify_hist(Ctx& c) {
    Checkpoint cp = read_checkpoint(c.checkpoint_arg);
    auto framed = unframe_proof(read_b64_artifact(c.proof_arg));
    if (!framed || framed->first != kTagHist) fail("not a hist proof");
    ByteReader r(framed->second);
    uint32_t n = r.u32be();
    std::vector<Bytes> values;
    for (uint32_t i = 0; i < n; ++i) {
        uint32_t len = r.u32be();
        values.push_back(r.raw(len));
    }
    auto proof = HistProof::decode(r);
    if (!proof || !r.ok()) fail("malformed hist proof");
    HistRep rep = read_state(c.state_file, nullptr, c.old_arg);
    auto out = ver_hist(cp, str_bytes(c.key_str), rep, values, *proof);
    if (!out.verdict) return reject(out.verdict.reason);
    write_state(c.out_state.empty() ? c.state_file : c.out_state, out.updated);
    return accept();
}

int cmd_registry_audit(Ctx& c) {
    Registry reg = Registry::load(c.reg_dir);
    HistRep rep = read_state(c.state_file, &reg);
    auto ar = reg.audit(str_bytes(c.key_str), rep);
    Bytes body;
    ar.proof.encode(body);
    write_b64_artifact(c.out, frame_proof(kTagAudit, body));
    std::cout << ar.checkpoint.to_base64() << "\n";
    return 0;
}

int cmd_registry_verify_audit(Ctx& c) {
    Checkpoint cp = read_checkpoint(c.checkpoint_arg);
    auto framed = unframe_proof(read_b64_artifact(c.proof_arg));
    if (!framed || framed->first != kTagAudit) fail("not an audit proof");
    ByteReader r(framed->second);
    auto proof = AuditProof::decode(r);
    if (!proof || !r.ok()) fail("malformed audit proof");
    std::vector<Bytes> values;
    for (const auto& s : proof->steps) values.push_back(s.value);
    HistRep rep = read_state(c.state_file, nullptr, c.old_arg);
    auto out = ver_audit(cp, str_bytes(c.key_str), rep, values, *proof);
    if (!out.verdict) return reject(out.verdict.reason);
    write_state(c.out_state.empty() ? c.state_file : c.out_state, out.updated);
    return accept();
}

// --- witness -----------------------------------------------------------------

struct WitnessDir {
    fs::path dir;
    KeyPair key;
    WitnessState state;

    static WitnessDir open_or_init(const std::string& path) {
        WitnessDir w;
        w.dir = path;
        fs::create_directories(w.dir);
        fs::path keyfile = w.dir / "witness.key";
        if (fs::exists(keyfile)) {
            std::string raw = slurp(keyfile.string());
            if (raw.size() != 96) fail("corrupt witness.key");
            std::copy(raw.begin(), raw.begin() + 64, w.key.sk.begin());
            std::copy(raw.begin() + 64, raw.end(), w.key.pk.begin());
        } else {
            w.key = KeyPair::generate();
            std::string raw(w.key.sk.begin(), w.key.sk.end());
            raw.append(w.key.pk.begin(), w.key.pk.end());
            spit(keyfile.string(), raw);
        }
        w.state = WitnessState(0, w.key);
        for (const auto& f : fs::directory_iterator(w.dir)) {
            std::string name = f.path().filename().string();
            if (name.rfind("server_", 0) != 0) continue;
            ActorId id = ActorId(std::stoul(name.substr(7)));
            std::string raw = slurp(f.path().string());
            std::vector<Checkpoint> list;
            for (size_t off = 0; off + Checkpoint::kWireBytes <= raw.size();
                 off += Checkpoint::kWireBytes) {
                auto cp = Checkpoint::deserialize(std::span(
                    reinterpret_cast<const uint8_t*>(raw.data()) + off, Checkpoint::kWireBytes));
                if (!cp) fail("corrupt " + name);
                list.push_back(*cp);
            }
            w.state.restore(id, std::move(list));
        }
        return w;
    }

    void save() {
        for (const auto& [id, list] : state.all_stored()) {
            std::string raw;
            for (const Checkpoint& c : list) {
                Bytes b = c.serialize();
                raw.append(b.begin(), b.end());
            }
            spit((dir / ("server_" + std::to_string(id))).string(), raw);
        }
    }
};

int cmd_witness_offer(Ctx& c) {
    WitnessDir w = WitnessDir::open_or_init(c.witness_dir);
    LogDir d = LogDir::open_or_init(c.log_dir);
    w.state.register_server(ActorId(c.server_id), d.key.pk);
    Checkpoint offered = read_checkpoint(c.checkpoint_arg);
    auto out = w.state.process_offer(
        ActorId(c.server_id), offered,
        [&](const std::optional<Checkpoint>& from,
            const Checkpoint& to) -> std::optional<RangeConsistencyProof> {
            uint64_t old_n = from ? from->size : 0;
            if (to.size > d.log.size() || old_n > to.size) return std::nullopt;
            return d.log.prove_append_sizes(old_n, to.size);
        });
    if (out.accepted()) {
        w.save();
        std::cout << "stored\n";
        return 0;
    }
    if (out.audit) {
        Bytes rec;
        out.audit->encode(rec);
        std::cerr << "audit-record " << to_base64(rec) << "\n";
    }
    switch (out.status) {
        case OfferStatus::RejectedBadSignature: return reject("BadSignature");
        case OfferStatus::RejectedStale: return reject("StaleOffer");
        default: return reject("InconsistentCheckpoint");
    }
}

int cmd_witness_collect(Ctx& c) {
    WitnessDir w = WitnessDir::open_or_init(c.witness_dir);
    auto list = w.state.collect(ActorId(c.server_id), c.gamma ? c.gamma : 10);
    Bytes frame = encode_collect_response(0, ActorId(c.server_id), list);
    write_b64_artifact(c.out, frame);
    std::cerr << list.size() << " checkpoints, " << frame.size() << " bytes\n";
    return 0;
}

// --- sim ----------------------------------------------------------------------

std::vector<uint64_t> parse_gamma_range(const std::string& spec, uint64_t fallback) {
    if (spec.empty()) return {fallback};
    auto colon = spec.find(':');
    if (colon == std::string::npos) return {std::stoull(spec)};
    uint64_t a = std::stoull(spec.substr(0, colon));
    uint64_t b = std::stoull(spec.substr(colon + 1));
    std::vector<uint64_t> out;
    for (uint64_t g = a; g <= b; ++g) out.push_back(g);
    return out;
}

sim::SimConfig make_config(const Ctx& c) {
    sim::SimConfig cfg = c.config_file.empty()
                             ? sim::setting_by_name(c.setting)
                             : sim::parse_config_file(c.config_file, sim::setting_by_name(c.setting));
    cfg.seed = c.seed;
    cfg.runs = c.runs;
    if (c.gamma) cfg.gamma = c.gamma;
    return cfg;
}

int cmd_sim_liveness(Ctx& c) {
    sim::SimConfig cfg = make_config(c);
    auto gammas = parse_gamma_range(c.gamma_range, cfg.gamma);
    auto res = sim::run_liveness(cfg, gammas);
    spit(c.sim_out, sim::csv_render(res.rows));
    return 0;
}

int cmd_sim_latency(Ctx& c) {
    sim::SimConfig cfg = make_config(c);
    sim::PhaseResult res = c.phase == "broadcast" ? sim::run_broadcast_latency(cfg)
                                                  : sim::run_collection_latency(cfg);
    spit(c.sim_out, sim::csv_render(res.rows));
    return 0;
}

int cmd_sim_attack(Ctx& c) {
    sim::GameConfig cfg;
    if (c.mode == "safe") cfg.mode = sim::GameConfig::kSafe;
    else if (c.mode == "q-below") cfg.mode = sim::GameConfig::kQBelowBound;
    else if (c.mode == "gossip-off") cfg.mode = sim::GameConfig::kGossipDisabled;
    else if (c.mode == "replay-only") cfg.mode = sim::GameConfig::kReplayOnly;
    else fail("unknown --mode " + c.mode);

    std::vector<sim::CsvRow> rows;
    uint64_t wins = 0;
    for (uint64_t s = 1; s <= c.seeds; ++s) {
        bool won = (c.game == "oscillation") ? sim::attack_oscillation(cfg, s).won
                                             : sim::attack_splitview(cfg, s).won;
        wins += won;
        rows.push_back({c.game + "/" + c.mode, s, 0, "adversary_won", won ? 1.0 : 0.0});
    }
    rows.push_back({c.game + "/" + c.mode, 0, 0, "win_fraction", double(wins) / double(c.seeds)});
    spit(c.sim_out, sim::csv_render(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verifiable logs, compact ranges, and a map-of-logs registry"};
    app.require_subcommand(1);
    Ctx c;
    app.add_flag("--explain", g_explain, "print the verification stage that failed");

    int rc = 0;
    auto run = [&rc](int (*fn)(Ctx&), Ctx& ctx) {
        return [fn, &ctx, &rc]() { rc = fn(ctx); };
    };

    // log
    auto* log = app.add_subcommand("log", "append-only log operations");
    log->require_subcommand(1);
    auto* lappend = log->add_subcommand("append", "append entries, print new checkpoint");
    lappend->add_option("--log", c.log_dir)->required();
    lappend->add_option("--entry", c.entries, "entry payload (repeatable)");
    lappend->add_flag("--hex", c.entries_hex, "entries are hex encoded");
    lappend->add_option("--timestamp", c.timestamp);
    lappend->add_option("--out", c.out, "checkpoint output file (default stdout)");
    lappend->callback(run(cmd_log_append, c));

    auto* lincl = log->add_subcommand("prove-incl", "inclusion proof for an entry");
    lincl->add_option("--log", c.log_dir)->required();
    lincl->add_option("--index", c.index);
    lincl->add_option("--entry", c.entries);
    lincl->add_flag("--hex", c.entries_hex);
    lincl->add_option("--out", c.out);
    lincl->callback(run(cmd_log_prove_incl, c));

    auto* lvincl = log->add_subcommand("verify-incl", "verify an inclusion proof");
    lvincl->add_option("--checkpoint", c.checkpoint_arg)->required();
    lvincl->add_option("--proof", c.proof_arg)->required();
    lvincl->add_option("--entry", c.entries)->required();
    lvincl->add_flag("--hex", c.entries_hex);
    lvincl->add_option("--server-pub", c.server_pub, "hex public key; also check signature");
    lvincl->callback(run(cmd_log_verify_incl, c));

    auto* lpapp = log->add_subcommand("prove-append", "consistency proof between sizes");
    lpapp->add_option("--log", c.log_dir)->required();
    lpapp->add_option("--old-size", c.old_size);
    lpapp->add_option("--new-size", c.new_size);
    lpapp->add_option("--old", c.old_arg, "old checkpoint (base64/file)");
    lpapp->add_option("--new", c.new_arg, "new checkpoint (base64/file)");
    lpapp->add_option("--out", c.out);
    lpapp->callback(run(cmd_log_prove_append, c));

    auto* lvapp = log->add_subcommand("verify-append", "verify a consistency proof");
    lvapp->add_option("--old", c.old_arg)->required();
    lvapp->add_option("--new", c.new_arg)->required();
    lvapp->add_option("--proof", c.proof_arg)->required();
    lvapp->callback(run(cmd_log_verify_append, c));

    // range
    auto* range = app.add_subcommand("range", "compact range operations");
    range->require_subcommand(1);
    auto* rcomp = range->add_subcommand("compute", "compact range of [lo, hi)");
    rcomp->add_option("--size", c.size)->required();
    rcomp->add_option("--lo", c.lo)->required();
    rcomp->add_option("--hi", c.hi)->required();
    rcomp->add_option("--log", c.log_dir, "log dir (default: synthetic tree)");
    rcomp->add_option("--out", c.out);
    rcomp->callback(run(cmd_range_compute, c));

    auto* rmerge = range->add_subcommand("merge", "merge adjacent ranges");
    rmerge->add_option("files", c.range_files, "range files, left to right")->required();
    rmerge->add_option("--out", c.out);
    rmerge->callback(run(cmd_range_merge, c));

    auto* rroot = range->add_subcommand("root", "root of a prefix range");
    rroot->add_option("file", c.range_files)->required();
    rroot->callback(run(cmd_range_root, c));

    // registry
    auto* reg = app.add_subcommand("registry", "map-of-logs registry");
    reg->require_subcommand(1);
    auto* rinit = reg->add_subcommand("init", "create a registry with a genesis checkpoint");
    rinit->add_option("--dir", c.reg_dir)->required();
    rinit->add_option("--timestamp", c.timestamp);
    rinit->callback(run(cmd_registry_init, c));

    auto* rapp = reg->add_subcommand("append", "append key/value pairs");
    rapp->add_option("--dir", c.reg_dir)->required();
    rapp->add_option("--key", c.key_str);
    rapp->add_option("--value", c.value_str);
    rapp->add_flag("--value-hex", c.value_hex);
    rapp->add_option("--batch", c.batch_file, "file of key<TAB>hexvalue lines");
    rapp->add_option("--timestamp", c.timestamp);
    rapp->callback(run(cmd_registry_append, c));

    auto* rlook = reg->add_subcommand("lookup", "latest value + proof");
    rlook->add_option("--dir", c.reg_dir)->required();
    rlook->add_option("--key", c.key_str)->required();
    rlook->add_option("--out", c.out, "proof artifact file")->required();
    rlook->callback(run(cmd_registry_lookup, c));

    auto* rvlook = reg->add_subcommand("verify-lookup", "verify a lookup proof");
    rvlook->add_option("--checkpoint", c.checkpoint_arg)->required();
    rvlook->add_option("--key", c.key_str)->required();
    rvlook->add_option("--value", c.value_str, "hex value override (default: from artifact)");
    rvlook->add_flag("--value-hex", c.value_hex);
    rvlook->add_option("--proof", c.proof_arg)->required();
    rvlook->callback(run(cmd_registry_verify_lookup, c));

    auto* rhist = reg->add_subcommand("hist", "history since the stored state");
    rhist->add_option("--dir", c.reg_dir)->required();
    rhist->add_option("--key", c.key_str)->required();
    rhist->add_option("--state", c.state_file, "client state file (absent = bootstrap)");
    rhist->add_option("--out", c.out)->required();
    rhist->callback(run(cmd_registry_hist, c));

    auto* rvhist = reg->add_subcommand("verify-hist", "verify history and update state");
    rvhist->add_option("--checkpoint", c.checkpoint_arg)->required();
    rvhist->add_option("--key", c.key_str)->required();
    rvhist->add_option("--state", c.state_file)->required();
    rvhist->add_option("--out-state", c.out_state, "updated state (default: --state)");
    rvhist->add_option("--genesis", c.old_arg, "genesis checkpoint for the bootstrap round");
    rvhist->add_option("--proof", c.proof_arg)->required();
    rvhist->callback(run(cmd_registry_verify_hist, c));

    auto* raudit = reg->add_subcommand("audit", "personal audit since the stored state");
    raudit->add_option("--dir", c.reg_dir)->required();
    raudit->add_option("--key", c.key_str)->required();
    raudit->add_option("--state", c.state_file);
    raudit->add_option("--out", c.out)->required();
    raudit->callback(run(cmd_registry_audit, c));

    auto* rvaudit = reg->add_subcommand("verify-audit", "verify an audit and update state");
    rvaudit->add_option("--checkpoint", c.checkpoint_arg)->required();
    rvaudit->add_option("--key", c.key_str)->required();
    rvaudit->add_option("--state", c.state_file)->required();
    rvaudit->add_option("--out-state", c.out_state);
    rvaudit->add_option("--genesis", c.old_arg, "genesis checkpoint for the bootstrap round");
    rvaudit->add_option("--proof", c.proof_arg)->required();
    rvaudit->callback(run(cmd_registry_verify_audit, c));

    // witness
    auto* wit = app.add_subcommand("witness", "in-process witness");
    wit->require_subcommand(1);
    auto* woffer = wit->add_subcommand("offer", "offer a checkpoint to the witness");
    woffer->add_option("--witness-dir", c.witness_dir)->required();
    woffer->add_option("--log", c.log_dir, "server log dir serving proofs")->required();
    woffer->add_option("--server-id", c.server_id);
    woffer->add_option("--checkpoint", c.checkpoint_arg)->required();
    woffer->callback(run(cmd_witness_offer, c));

    auto* wcollect = wit->add_subcommand("collect", "countersigned checkpoint list");
    wcollect->add_option("--witness-dir", c.witness_dir)->required();
    wcollect->add_option("--server-id", c.server_id);
    wcollect->add_option("--gamma", c.gamma);
    wcollect->add_option("--out", c.out, "response frame output")->required();
    wcollect->callback(run(cmd_witness_collect, c));

    // sim
    auto* simc = app.add_subcommand("sim", "deterministic simulator");
    simc->require_subcommand(1);
    auto add_sim_common = [&](CLI::App* s) {
        s->add_option("--setting", c.setting, "aggressive|kt|ct");
        s->add_option("--config", c.config_file, "key-value config file");
        s->add_option("--gamma", c.gamma);
        s->add_option("--seed", c.seed);
        s->add_option("--runs", c.runs);
        s->add_option("--out", c.sim_out, "CSV output file (default stdout)");
    };
    auto* sliv = simc->add_subcommand("liveness", "consensus fraction after one request");
    add_sim_common(sliv);
    sliv->add_option("--gamma-range", c.gamma_range, "a:b sweep");
    sliv->callback(run(cmd_sim_liveness, c));

    auto* slat = simc->add_subcommand("latency", "end-to-end phase timing and bandwidth");
    add_sim_common(slat);
    slat->add_option("--phase", c.phase, "broadcast|collection");
    slat->callback(run(cmd_sim_latency, c));

    auto* satk = simc->add_subcommand("attack", "security games with scripted adversaries");
    add_sim_common(satk);
    satk->add_option("--game", c.game, "splitview|oscillation");
    satk->add_option("--mode", c.mode, "safe|q-below|gossip-off|replay-only");
    satk->add_option("--seeds", c.seeds, "number of seeded scenarios");
    satk->callback(run(cmd_sim_attack, c));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}

// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exercises the installed binary end to end through files and exit codes.
#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

#ifndef MOLOG_CLI_PATH
#define MOLOG_CLI_PATH "molog"
#endif

struct CliResult {
    int exit_code;
    std::string out;
};

CliResult cli(const std::string& args) {
    std::string cmd = std::string(MOLOG_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    EXPECT_NE(p, nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    int status = pclose(p);
    return {WEXITSTATUS(status), out};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("molog_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& p) const { return (path / p).string(); }
};

}  // namespace

TEST(Cli, RangeComputeMatchesReferenceDecomposition) {
    CliResult r = cli("range compute --size 16 --lo 3 --hi 11");
    EXPECT_EQ(r.exit_code, 0);
    std::istringstream is(r.out);
    std::string line;
    std::vector<std::string> prefixes;
    while (std::getline(is, line)) prefixes.push_back(line.substr(0, line.find_last_of(' ')));
    ASSERT_EQ(prefixes.size(), 4u);  // four node lines
    std::vector<std::string> ids;
    for (auto& p : prefixes) ids.push_back(p.substr(0, p.find_last_of(' ') == std::string::npos
                                                           ? p.size()
                                                           : 3));
    EXPECT_EQ(prefixes[0].substr(0, 3), "0 3");
    EXPECT_EQ(prefixes[1].substr(0, 3), "2 1");
    EXPECT_EQ(prefixes[2].substr(0, 3), "1 4");
    EXPECT_EQ(prefixes[3].substr(0, 4), "0 10");
}

TEST(Cli, RangeMergeAndRoot) {
    TempDir t;
    ASSERT_EQ(cli("range compute --size 16 --lo 0 --hi 11 --out " + (t / "a.txt")).exit_code, 0);
    ASSERT_EQ(cli("range compute --size 16 --lo 11 --hi 16 --out " + (t / "b.txt")).exit_code, 0);
    CliResult merged = cli("range merge " + (t / "a.txt") + " " + (t / "b.txt") + " --out " + (t / "m.txt"));
    ASSERT_EQ(merged.exit_code, 0);
    CliResult root = cli("range root " + (t / "m.txt"));
    ASSERT_EQ(root.exit_code, 0);
    CliResult full = cli("range compute --size 16 --lo 0 --hi 16");
    // Full tree of 16: single node whose digest is the root.
    ASSERT_EQ(full.exit_code, 0);
    EXPECT_NE(full.out.find(root.out.substr(0, 64)), std::string::npos);
}

TEST(Cli, LogProveVerifyExitCodes) {
    TempDir t;
    std::string logd = t / "log";
    ASSERT_EQ(cli("log append --log " + logd + " --entry a --entry b --entry c --timestamp 1 --out " +
                  (t / "cp3.txt")).exit_code, 0);
    ASSERT_EQ(cli("log append --log " + logd + " --entry d --timestamp 2 --out " + (t / "cp4.txt"))
                  .exit_code, 0);
    ASSERT_EQ(cli("log prove-append --log " + logd + " --old-size 3 --new-size 4 --out " +
                  (t / "cons.txt")).exit_code, 0);
    EXPECT_EQ(cli("log verify-append --old " + (t / "cp3.txt") + " --new " + (t / "cp4.txt") +
                  " --proof " + (t / "cons.txt")).exit_code, 0);
    // Swapped checkpoints: shrinking log, reject with exit 1.
    EXPECT_EQ(cli("log verify-append --old " + (t / "cp4.txt") + " --new " + (t / "cp3.txt") +
                  " --proof " + (t / "cons.txt")).exit_code, 1);
    // Garbage proof file: usage/IO error, exit 2.
    std::ofstream(t / "junk.txt") << "!!!not-base64!!!";
    EXPECT_EQ(cli("log verify-append --old " + (t / "cp3.txt") + " --new " + (t / "cp4.txt") +
                  " --proof " + (t / "junk.txt")).exit_code, 2);

    ASSERT_EQ(cli("log prove-incl --log " + logd + " --entry b --out " + (t / "incl.txt")).exit_code,
              0);
    EXPECT_EQ(cli("log verify-incl --checkpoint " + (t / "cp4.txt") + " --proof " + (t / "incl.txt") +
                  " --entry b").exit_code, 0);
    EXPECT_EQ(cli("log verify-incl --checkpoint " + (t / "cp4.txt") + " --proof " + (t / "incl.txt") +
                  " --entry z").exit_code, 1);
}

TEST(Cli, RegistryEndToEndWithState) {
    TempDir t;
    std::string reg = t / "reg";
    CliResult init = cli("registry init --dir " + reg + " --timestamp 1");
    ASSERT_EQ(init.exit_code, 0);
    std::ofstream(t / "genesis.txt") << init.out;

    ASSERT_EQ(cli("registry append --dir " + reg + " --key alice --value v1 --timestamp 2")
                  .exit_code, 0);
    ASSERT_EQ(cli("registry append --dir " + reg + " --key bob --value w1 --timestamp 3").exit_code,
              0);

    CliResult look = cli("registry lookup --dir " + reg + " --key alice --out " + (t / "look.txt"));
    ASSERT_EQ(look.exit_code, 0);
    std::ofstream(t / "lookcp.txt") << look.out;
    EXPECT_EQ(cli("registry verify-lookup --checkpoint " + (t / "lookcp.txt") +
                  " --key alice --proof " + (t / "look.txt")).exit_code, 0);
    EXPECT_EQ(cli("registry verify-lookup --checkpoint " + (t / "lookcp.txt") +
                  " --key bob --proof " + (t / "look.txt")).exit_code, 1);

    CliResult hist = cli("registry hist --dir " + reg + " --key alice --out " + (t / "hist.txt"));
    ASSERT_EQ(hist.exit_code, 0);
    std::ofstream(t / "histcp.txt") << hist.out;
    EXPECT_EQ(cli("registry verify-hist --checkpoint " + (t / "histcp.txt") +
                  " --key alice --state " + (t / "state.txt") + " --genesis " + (t / "genesis.txt") +
                  " --proof " + (t / "hist.txt")).exit_code, 0);
    EXPECT_TRUE(fs::exists(t / "state.txt"));

    ASSERT_EQ(cli("registry append --dir " + reg + " --key alice --value v2 --timestamp 4")
                  .exit_code, 0);
    CliResult audit = cli("registry audit --dir " + reg + " --key alice --state " + (t / "state.txt") +
                    " --out " + (t / "audit.txt"));
    ASSERT_EQ(audit.exit_code, 0);
    std::ofstream(t / "auditcp.txt") << audit.out;
    EXPECT_EQ(cli("registry verify-audit --checkpoint " + (t / "auditcp.txt") +
                  " --key alice --state " + (t / "state.txt") + " --proof " + (t / "audit.txt"))
                  .exit_code, 0);
}

TEST(Cli, WitnessOfferAndCollect) {
    TempDir t;
    std::string logd = t / "log";
    ASSERT_EQ(cli("log append --log " + logd + " --entry a --entry b --timestamp 1 --out " +
                  (t / "cp2.txt")).exit_code, 0);
    ASSERT_EQ(cli("witness offer --witness-dir " + (t / "wd") + " --log " + logd +
                  " --checkpoint " + (t / "cp2.txt")).exit_code, 0);
    ASSERT_EQ(cli("log append --log " + logd + " --entry c --timestamp 2 --out " + (t / "cp3.txt"))
                  .exit_code, 0);
    ASSERT_EQ(cli("witness offer --witness-dir " + (t / "wd") + " --log " + logd +
                  " --checkpoint " + (t / "cp3.txt")).exit_code, 0);
    EXPECT_EQ(cli("witness collect --witness-dir " + (t / "wd") + " --gamma 5 --out " +
                  (t / "resp.txt")).exit_code, 0);
    EXPECT_TRUE(fs::exists(t / "resp.txt"));
}

TEST(Cli, SimLivenessDeterministicCsv) {
    TempDir t;
    std::string base = "sim liveness --setting ct --gamma 4 --seed 3 --runs 2 --out ";
    ASSERT_EQ(cli(base + (t / "a.csv")).exit_code, 0);
    ASSERT_EQ(cli(base + (t / "b.csv")).exit_code, 0);
    std::ifstream fa(t / "a.csv"), fb(t / "b.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_NE(sa.str().find("consensus_fraction"), std::string::npos);
}

TEST(Cli, UnknownSubcommandExitsTwo) {
    EXPECT_EQ(cli("frobnicate").exit_code, 2);
    EXPECT_EQ(cli("log").exit_code, 2);  // missing required subcommand
}

TEST(Cli, SimLivenessReferenceAnchor) {
    TempDir t;
    ASSERT_EQ(cli("sim liveness --setting ct --gamma 10 --seed 1 --runs 5 --out " +
                  (t / "ct.csv")).exit_code, 0);
    std::ifstream f(t / "ct.csv");
    std::string line;
    double fraction = -1;
    while (std::getline(f, line)) {
        if (line.find(",consensus_fraction,") != std::string::npos)
            fraction = std::stod(line.substr(line.find_last_of(',') + 1));
    }
    EXPECT_GE(fraction, 0.9);
}

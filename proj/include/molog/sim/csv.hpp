// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

namespace molog::sim {

/// One output record. Non-applicable dimensions are zero.
struct CsvRow {
    std::string setting;
    uint64_t seed = 0;
    uint64_t gamma = 0;
    std::string metric;
    double value = 0;
};

inline std::string csv_header() { return "setting,seed,gamma,metric,value\n"; }

/// Fixed-precision formatting keeps re-runs byte-identical.
inline std::string csv_format(const CsvRow& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%" PRIu64 ",%" PRIu64 ",%s,%.9f\n", r.setting.c_str(),
                  r.seed, r.gamma, r.metric.c_str(), r.value);
    return buf;
}

inline std::string csv_render(const std::vector<CsvRow>& rows) {
    std::string out = csv_header();
    for (const auto& r : rows) out += csv_format(r);
    return out;
}

}  // namespace molog::sim

// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace molog {

enum class Errc {
    EmptyRange,
    RangeOutOfBounds,
    NonContiguousRanges,
    NotPrefixRange,
    EntryNotFound,
    UnknownCheckpoint,
    DuplicateKey,
    KeyNotFound,
    StaleAhead,
    InvalidParameters,
    HeightOutOfRange,
    IoError,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::EmptyRange: return "EmptyRange";
        case Errc::RangeOutOfBounds: return "RangeOutOfBounds";
        case Errc::NonContiguousRanges: return "NonContiguousRanges";
        case Errc::NotPrefixRange: return "NotPrefixRange";
        case Errc::EntryNotFound: return "EntryNotFound";
        case Errc::UnknownCheckpoint: return "UnknownCheckpoint";
        case Errc::DuplicateKey: return "DuplicateKey";
        case Errc::KeyNotFound: return "KeyNotFound";
        case Errc::StaleAhead: return "StaleAhead";
        case Errc::InvalidParameters: return "InvalidParameters";
        case Errc::HeightOutOfRange: return "HeightOutOfRange";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

/// Thrown on contract violations (bad ranges, unknown checkpoints, ...).
/// Verification of untrusted material never throws; it returns a Verdict.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& detail = "")
        : std::runtime_error(std::string(errc_name(code)) + (detail.empty() ? "" : ": " + detail)),
          code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

/// Outcome of verifying untrusted input. Rejects carry the stage that failed,
/// for `--explain` style diagnostics.
struct Verdict {
    bool ok = false;
    std::string reason;  // empty on accept

    explicit operator bool() const { return ok; }

    static Verdict accept() { return {true, {}}; }
    static Verdict reject(std::string why) { return {false, std::move(why)}; }
};

}  // namespace molog

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nqs {

enum class Errc {
    contract,
    capacity,
    acyclicity,
    numeric,
    degenerate_state,
    amplitude_overflow,
    consistency,
    spec,
    domain,
    degree,
    io,
    parse,
};

[[nodiscard]] constexpr std::string_view to_string(Errc code) noexcept {
    switch(code) {
        case Errc::contract: return "contract";
        case Errc::capacity: return "capacity";
        case Errc::acyclicity: return "acyclicity";
        case Errc::numeric: return "numeric";
        case Errc::degenerate_state: return "degenerate_state";
        case Errc::amplitude_overflow: return "amplitude_overflow";
        case Errc::consistency: return "consistency";
        case Errc::spec: return "spec";
        case Errc::domain: return "domain";
        case Errc::degree: return "degree";
        case Errc::io: return "io";
        case Errc::parse: return "parse";
    }
    return "unknown";
}

/// Every failure raised by the library carries a category so that the CLI can
/// map it onto an exit status and a structured error document.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string &what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string &what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string &what) {
    if(!cond) fail(code, what);
}

} // namespace nqs

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/core.hpp"
#include "nqs/errors.hpp"
#include "nqs/graph.hpp"
#include "nqs/parallel.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace nqs {

/// Dense amplitudes indexed by SpinConfig::bits. `norm_was` is the 2-norm
/// before normalization.
struct Statevector {
    int               n = 0;
    std::vector<cplx> amplitudes;
    double            norm_was = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return amplitudes.size(); }
    [[nodiscard]] cplx        operator[](std::uint64_t bits) const { return amplitudes[bits]; }
};

inline constexpr std::size_t kStateChunk = 4096;

namespace detail {

inline std::size_t chunk_count(std::size_t dim) { return (dim + kStateChunk - 1) / kStateChunk; }

/// Sum of |a|^2 per fixed chunk, then chunk sums added in chunk order; the
/// result does not depend on the worker count.
inline double chunked_norm_sq(const std::vector<cplx> &a, int threads) {
    const auto          chunks = chunk_count(a.size());
    std::vector<double> partial(chunks, 0.0);
    parallel_for(chunks, threads, [&](std::size_t c) {
        double     acc = 0.0;
        const auto end = std::min(a.size(), (c + 1) * kStateChunk);
        for(auto i = c * kStateChunk; i < end; ++i) acc += std::norm(a[i]);
        partial[c] = acc;
    });
    double total = 0.0;
    for(double p : partial) total += p;
    return total;
}

} // namespace detail

/// Normalizes raw amplitudes; throws degenerate_state on zero norm.
[[nodiscard]] inline Statevector normalize_amplitudes(int n, std::vector<cplx> amps, int threads = 0) {
    require(amps.size() == (std::size_t{1} << n), Errc::contract, "amplitude count must be 2^n");
    const double norm = std::sqrt(detail::chunked_norm_sq(amps, threads));
    require(std::isfinite(norm), Errc::amplitude_overflow, "state norm is not finite");
    require(norm > 0.0, Errc::degenerate_state, "all amplitudes vanish; the state cannot be normalized");
    const double inv = 1.0 / norm;
    parallel_for(detail::chunk_count(amps.size()), threads, [&](std::size_t c) {
        const auto end = std::min(amps.size(), (c + 1) * kStateChunk);
        for(auto i = c * kStateChunk; i < end; ++i) amps[i] *= inv;
    });
    return {n, std::move(amps), norm};
}

/// Evaluates amp(config) for all 2^n configurations in fixed chunks, each with
/// its own evaluator from make_eval(), then normalizes.
template<class MakeEval>
[[nodiscard]] Statevector materialize_with(int n, MakeEval &&make_eval, int threads = 0) {
    check_spin_count(n);
    const std::size_t dim = std::size_t{1} << n;
    std::vector<cplx> amps(dim);
    parallel_for(detail::chunk_count(dim), threads, [&](std::size_t c) {
        auto       eval = make_eval();
        const auto end  = std::min(dim, (c + 1) * kStateChunk);
        for(auto i = c * kStateChunk; i < end; ++i) {
            const SpinConfig s{static_cast<std::uint64_t>(i), n};
            try {
                const cplx v = eval(s);
                require(std::isfinite(v.real()) && std::isfinite(v.imag()), Errc::amplitude_overflow, "amplitude is not finite");
                amps[i] = v;
            } catch(const Error &e) {
                if(e.code() != Errc::amplitude_overflow && e.code() != Errc::numeric) throw;
                fail(e.code(), std::string(e.what()) + " at configuration " + mask_to_hex(i) + " (n=" + std::to_string(n) + ")");
            }
        }
    });
    return normalize_amplitudes(n, std::move(amps), threads);
}

[[nodiscard]] inline Statevector materialize(const ComputationGraph &g, int threads = 0) {
    return materialize_with(g.n(), [&] { return GraphEvaluator(g); }, threads);
}

[[nodiscard]] inline Statevector materialize(const ReducedForm &r, int threads = 0) {
    return materialize_with(r.n, [&] { return ReducedEvaluator(r); }, threads);
}

/// <psi|phi>, conjugating psi.
[[nodiscard]] inline cplx overlap(const Statevector &psi, const Statevector &phi) {
    require(psi.n == phi.n && psi.size() == phi.size(), Errc::contract, "overlap of states with different sizes");
    cplx acc{};
    for(std::size_t i = 0; i < psi.size(); ++i) acc += std::conj(psi.amplitudes[i]) * phi.amplitudes[i];
    return acc;
}

[[nodiscard]] inline double two_norm_distance(const Statevector &psi, const Statevector &phi) {
    require(psi.n == phi.n && psi.size() == phi.size(), Errc::contract, "distance between states with different sizes");
    double acc = 0.0;
    for(std::size_t i = 0; i < psi.size(); ++i) acc += std::norm(psi.amplitudes[i] - phi.amplitudes[i]);
    return std::sqrt(acc);
}

// Binary layout: "NQSV", u32 version, u32 n, u32 reserved (0), then 2^n
// interleaved (re, im) float64 values; all little-endian.
inline constexpr std::uint32_t kStatevectorVersion = 1;

namespace detail {
template<class T>
void put_le(std::ostream &out, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    out.write(reinterpret_cast<const char *>(&v), sizeof v);
}
template<class T>
T get_le(std::istream &in) {
    T v{};
    in.read(reinterpret_cast<char *>(&v), sizeof v);
    return v;
}
} // namespace detail

inline void write_statevector(const Statevector &psi, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), Errc::io, "cannot write " + path);
    out.write("NQSV", 4);
    detail::put_le<std::uint32_t>(out, kStatevectorVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.n));
    detail::put_le<std::uint32_t>(out, 0);
    for(const auto &a : psi.amplitudes) {
        detail::put_le(out, a.real());
        detail::put_le(out, a.imag());
    }
    require(out.good(), Errc::io, "write failed for " + path);
}

/// Reads a state file; amplitudes are renormalized and norm_was records the
/// stored norm.
[[nodiscard]] inline Statevector read_statevector(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    require(in.good() && std::memcmp(magic, "NQSV", 4) == 0, Errc::parse, path + ": not a statevector file");
    const auto version = detail::get_le<std::uint32_t>(in);
    const auto n       = detail::get_le<std::uint32_t>(in);
    (void)detail::get_le<std::uint32_t>(in);
    require(in.good() && version == kStatevectorVersion, Errc::parse, path + ": unsupported statevector version");
    require(n >= 1 && n <= static_cast<std::uint32_t>(kHardMaxSpins), Errc::capacity, path + ": spin count out of range");
    check_spin_count(static_cast<int>(n));
    std::vector<cplx> amps(std::size_t{1} << n);
    for(auto &a : amps) {
        const double re = detail::get_le<double>(in);
        const double im = detail::get_le<double>(in);
        a               = {re, im};
    }
    require(in.good(), Errc::parse, path + ": truncated amplitude data");
    in.peek();
    require(in.eof(), Errc::parse, path + ": trailing bytes after amplitude data");
    return normalize_amplitudes(static_cast<int>(n), std::move(amps));
}

} // namespace nqs

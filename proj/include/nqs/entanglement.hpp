// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/core.hpp"
#include "nqs/errors.hpp"
#include "nqs/statevector.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace nqs {

enum class LogBase { e, two };

[[nodiscard]] inline double nats_to(LogBase base, double nats) { return base == LogBase::e ? nats : nats / std::numbers::ln2; }

/// Scatters the low bits of `value` onto the set bits of `mask`.
[[nodiscard]] constexpr std::uint64_t deposit_bits(std::uint64_t value, std::uint64_t mask) noexcept {
    std::uint64_t out = 0;
    for(std::uint64_t bit = 1; mask; bit <<= 1) {
        const std::uint64_t low = mask & (~mask + 1);
        if(value & bit) out |= low;
        mask &= mask - 1;
    }
    return out;
}

/// Full basis indices for every local index on the positions of `mask`.
[[nodiscard]] inline std::vector<std::uint64_t> index_map(std::uint64_t mask) {
    const auto                 count = std::uint64_t{1} << std::popcount(mask);
    std::vector<std::uint64_t> out(count);
    for(std::uint64_t u = 0; u < count; ++u) out[u] = deposit_bits(u, mask);
    return out;
}

/// M[u, v] = psi(u on A, v on the complement).
struct BipartitionMatrix {
    Subregion                  region;
    Eigen::MatrixXcd           M;
    std::vector<std::uint64_t> row_bits;
    std::vector<std::uint64_t> col_bits;
};

inline void check_proper_region(const Statevector &psi, const Subregion &A) {
    require(A.n == psi.n, Errc::contract, "subregion and state have different spin counts");
    require(A.size() >= 1 && A.size() <= psi.n - 1, Errc::contract, "subregion must be a proper nonempty subset");
}

[[nodiscard]] inline BipartitionMatrix bipartition(const Statevector &psi, const Subregion &A) {
    check_proper_region(psi, A);
    BipartitionMatrix out{A, {}, index_map(A.mask), index_map(A.complement().mask)};
    out.M.resize(static_cast<Eigen::Index>(out.row_bits.size()), static_cast<Eigen::Index>(out.col_bits.size()));
    for(std::size_t v = 0; v < out.col_bits.size(); ++v)
        for(std::size_t u = 0; u < out.row_bits.size(); ++u)
            out.M(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = psi.amplitudes[out.row_bits[u] | out.col_bits[v]];
    return out;
}

/// Inverse of bipartition.
[[nodiscard]] inline Statevector flatten(const BipartitionMatrix &b) {
    Statevector psi;
    psi.n = b.region.n;
    psi.amplitudes.assign(std::size_t{1} << b.region.n, cplx{});
    for(std::size_t v = 0; v < b.col_bits.size(); ++v)
        for(std::size_t u = 0; u < b.row_bits.size(); ++u)
            psi.amplitudes[b.row_bits[u] | b.col_bits[v]] = b.M(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
    return psi;
}

/// Spectrum of a reduced density matrix. Entropy is stored in nats.
struct EntropyResult {
    std::vector<double> eigenvalues; // descending, sum 1
    double              entropy      = 0.0;
    int                 schmidt_rank = 0;

    [[nodiscard]] double entropy_in(LogBase base) const { return nats_to(base, entropy); }
};

inline constexpr double kNegativeClamp   = 1e-12;
inline constexpr double kTraceDriftLimit = 1e-8;
inline constexpr double kRankRelative    = 1e-10;
inline constexpr double kRankAbsolute    = 1e-14;

/// Clamps tiny negative eigenvalues and renormalizes before evaluating -sum l ln l.
[[nodiscard]] inline EntropyResult spectrum_to_entropy(std::vector<double> eig, double threshold_rel = kRankRelative) {
    for(double &l : eig) {
        require(std::isfinite(l), Errc::numeric, "eigensolver produced a non-finite eigenvalue");
        require(l >= -kNegativeClamp, Errc::numeric, "reduced density matrix has eigenvalue " + std::to_string(l) + " below the clamp window");
        if(l < 0.0) l = 0.0;
    }
    double trace = 0.0;
    for(double l : eig) trace += l;
    require(std::abs(trace - 1.0) <= kTraceDriftLimit, Errc::consistency,
            "reduced density matrix trace " + std::to_string(trace) + " drifts from 1");
    for(double &l : eig) l /= trace;
    std::sort(eig.begin(), eig.end(), std::greater<>());
    EntropyResult r;
    const double  cut = std::max(threshold_rel * (eig.empty() ? 0.0 : eig.front()), kRankAbsolute);
    for(double l : eig) {
        if(l > 0.0) r.entropy -= l * std::log(l);
        if(l > cut) ++r.schmidt_rank;
    }
    r.eigenvalues = std::move(eig);
    return r;
}

[[nodiscard]] inline std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd &H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    require(es.info() == Eigen::Success, Errc::numeric, "symmetric eigensolver did not converge");
    const auto         &v = es.eigenvalues();
    return {v.data(), v.data() + v.size()};
}

/// Gram matrix on the smaller side of M, then its eigenvalues.
[[nodiscard]] inline EntropyResult entropy(const BipartitionMatrix &b, double threshold_rel = kRankRelative) {
    Eigen::MatrixXcd G;
    if(b.M.rows() <= b.M.cols()) {
        G = Eigen::MatrixXcd::Zero(b.M.rows(), b.M.rows());
        G.selfadjointView<Eigen::Lower>().rankUpdate(b.M);
    } else {
        G = Eigen::MatrixXcd::Zero(b.M.cols(), b.M.cols());
        G.selfadjointView<Eigen::Lower>().rankUpdate(b.M.adjoint());
    }
    G.triangularView<Eigen::StrictlyUpper>() = G.adjoint();
    return spectrum_to_entropy(hermitian_eigenvalues(G), threshold_rel);
}

inline constexpr Eigen::Index kGramColumnBlock = 256;

/// Reduced density matrix on the positions of `rows` (rho = sum_v m_v m_v^dag),
/// accumulated over fixed column blocks in order, without forming M.
[[nodiscard]] inline Eigen::MatrixXcd reduced_density(const Statevector &psi, std::uint64_t rows) {
    const auto       row_bits = index_map(rows);
    const auto       col_bits = index_map(~rows & low_mask(psi.n));
    const auto       R        = static_cast<Eigen::Index>(row_bits.size());
    const auto       C        = static_cast<Eigen::Index>(col_bits.size());
    Eigen::MatrixXcd G        = Eigen::MatrixXcd::Zero(R, R);
    Eigen::MatrixXcd block(R, std::min(C, kGramColumnBlock));
    for(Eigen::Index c0 = 0; c0 < C; c0 += kGramColumnBlock) {
        const auto width = std::min(kGramColumnBlock, C - c0);
        for(Eigen::Index c = 0; c < width; ++c)
            for(Eigen::Index r = 0; r < R; ++r)
                block(r, c) = psi.amplitudes[row_bits[static_cast<std::size_t>(r)] | col_bits[static_cast<std::size_t>(c0 + c)]];
        G.selfadjointView<Eigen::Lower>().rankUpdate(block.leftCols(width));
    }
    G.triangularView<Eigen::StrictlyUpper>() = G.adjoint();
    return G;
}

[[nodiscard]] inline EntropyResult subregion_entropy(const Statevector &psi, const Subregion &A, double threshold_rel = kRankRelative) {
    check_proper_region(psi, A);
    const std::uint64_t smaller = A.size() <= psi.n - A.size() ? A.mask : A.complement().mask;
    return spectrum_to_entropy(hermitian_eigenvalues(reduced_density(psi, smaller)), threshold_rel);
}

/// sqrt(1 - |<psi|phi>|^2) for normalized pure states.
[[nodiscard]] inline double pure_trace_distance(const Statevector &psi, const Statevector &phi) {
    return std::sqrt(std::max(0.0, 1.0 - std::norm(overlap(psi, phi))));
}

inline constexpr int kMaxDenseRegion = 13;

/// (1/2)||rho_A - sigma_A||_1 with both reduced states formed on A.
[[nodiscard]] inline double reduced_trace_distance(const Statevector &psi, const Statevector &phi, const Subregion &A) {
    require(psi.n == phi.n, Errc::contract, "trace distance between states with different spin counts");
    check_proper_region(psi, A);
    require(A.size() <= kMaxDenseRegion, Errc::capacity,
            "subregion of " + std::to_string(A.size()) + " spins exceeds the dense reduced-state limit of " + std::to_string(kMaxDenseRegion));
    const Eigen::MatrixXcd D   = reduced_density(psi, A.mask) - reduced_density(phi, A.mask);
    double                 acc = 0.0;
    for(double l : hermitian_eigenvalues(D)) acc += std::abs(l);
    return std::min(1.0, 0.5 * acc);
}

/// Binary entropy in nats with H(0) = H(1) = 0.
[[nodiscard]] inline double binary_entropy(double T) {
    auto term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
    return term(T) + term(1.0 - T);
}

/// T log(2^m - 1) + H_2(T).
[[nodiscard]] inline double fannes_audenaert_bound(double T, int size_a, LogBase base = LogBase::e) {
    require(T >= 0.0 && T <= 1.0, Errc::domain, "trace distance must lie in [0, 1], got " + std::to_string(T));
    require(size_a >= 1, Errc::domain, "subregion size must be >= 1");
    const double log_dim = static_cast<double>(size_a) * std::numbers::ln2 + std::log1p(-std::ldexp(1.0, -size_a));
    return nats_to(base, T * log_dim + binary_entropy(T));
}

} // namespace nqs

// SPDX-License-Identifier: Apache-2.0

#include "nqs/analytic.hpp"
#include "nqs/ansatz.hpp"
#include "nqs/entanglement.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

using namespace nqs;

namespace {

Statevector haar_state(int n, RngStream &rng) {
    std::vector<cplx> a(std::size_t{1} << n);
    for(auto &v : a) v = {rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)};
    return normalize_amplitudes(n, std::move(a), 1);
}

Statevector bell() { return normalize_amplitudes(2, {0.0, 1.0, 1.0, 0.0}); }

/// Entropy from singular values of M (independent of the Gram route).
double svd_entropy(const Statevector &psi, const Subregion &A) {
    const auto                     b = bipartition(psi, A);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(b.M);
    double                         s = 0.0;
    for(Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        const double p = svd.singularValues()(i) * svd.singularValues()(i);
        if(p > 0.0) s -= p * std::log(p);
    }
    return s;
}

} // namespace

TEST(Bipartition, BellMatrixAndFlattenRoundTrip) {
    const auto psi = bell();
    const auto b   = bipartition(psi, Subregion(0b01, 2));
    EXPECT_NEAR(std::abs(b.M(0, 1)), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(std::abs(b.M(1, 0)), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(std::abs(b.M(0, 0)), 0.0);
    EXPECT_EQ(flatten(b).amplitudes, psi.amplitudes);
    EXPECT_THROW((void)bipartition(psi, Subregion(0, 2)), Error);
    EXPECT_THROW((void)bipartition(psi, Subregion(0b11, 2)), Error);
}

TEST(Entropy, BellStateHasOneBit) {
    const auto r = subregion_entropy(bell(), Subregion(0b10, 2));
    EXPECT_NEAR(r.entropy, std::log(2.0), 1e-15);
    EXPECT_NEAR(r.entropy_in(LogBase::two), 1.0, 1e-15);
    EXPECT_EQ(r.schmidt_rank, 2);
}

TEST(Entropy, DickeFourHalf) {
    const auto r = subregion_entropy(materialize(build_dicke({4})), Subregion(0b0011, 4));
    ASSERT_EQ(r.schmidt_rank, 3);
    EXPECT_NEAR(r.eigenvalues[0], 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(r.eigenvalues[1], 1.0 / 6.0, 1e-14);
    EXPECT_NEAR(r.entropy, dicke_entropy(4, 2), 1e-14);
    EXPECT_NEAR(r.entropy, 0.8675, 1e-4);
}

TEST(Entropy, ProductStateIsUnentangled) {
    SnnqsSpec spec;
    spec.n          = 8;
    spec.activation = Activation(ActivationId::identity, ComplexMode::imag_only);
    RngStream  rng(4, 4);
    const auto psi = materialize(build_snnqs(spec, rng));
    const auto r   = subregion_entropy(psi, Subregion::contiguous(0, 3, 8));
    EXPECT_LT(r.entropy, 1e-12);
    EXPECT_EQ(r.schmidt_rank, 1);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(bipartition(psi, Subregion::contiguous(0, 3, 8)).M);
    EXPECT_LT(svd.singularValues()(1), 1e-12 * svd.singularValues()(0));
}

TEST(Entropy, GramRouteMatchesSvdOnRandomStates) {
    RngStream rng(21, 0);
    for(int trial = 0; trial < 5; ++trial) {
        const auto psi = haar_state(9, rng);
        for(std::uint64_t mask : {0x1ull, 0x7ull, 0x55ull, 0x1f0ull, 0x0f3ull}) {
            const Subregion A(mask, 9);
            EXPECT_NEAR(subregion_entropy(psi, A).entropy, svd_entropy(psi, A), 1e-12);
            // S(A) = S(complement) for pure states.
            EXPECT_NEAR(subregion_entropy(psi, A).entropy, subregion_entropy(psi, A.complement()).entropy, 1e-12);
        }
    }
}

TEST(Entropy, DickeTwentyTwoMatchesAnalytic) {
    const auto psi = materialize(build_dicke({22}));
    EXPECT_NEAR(subregion_entropy(psi, Subregion::contiguous(0, 11, 22)).entropy, dicke_entropy(22, 11), 1e-10);
}

TEST(Entropy, SpectrumChecks) {
    EXPECT_THROW((void)spectrum_to_entropy({0.5, 0.5 + 1e-6}), Error); // trace drift
    EXPECT_THROW((void)spectrum_to_entropy({1.0 + 1e-3, -1e-3}), Error); // negative beyond clamp
    const auto r = spectrum_to_entropy({1.0, -1e-13});
    EXPECT_EQ(r.schmidt_rank, 1);
    EXPECT_EQ(r.entropy, 0.0);
}

TEST(TraceDistance, PureAndReduced) {
    RngStream  rng(5, 5);
    const auto psi = haar_state(6, rng), phi = haar_state(6, rng);
    EXPECT_NEAR(pure_trace_distance(psi, psi), 0.0, 1e-7);
    Statevector e0{2, {1.0, 0.0, 0.0, 0.0}}, e1{2, {0.0, 1.0, 0.0, 0.0}};
    EXPECT_NEAR(pure_trace_distance(e0, e1), 1.0, 1e-15);
    EXPECT_NEAR(reduced_trace_distance(psi, psi, Subregion(0b101, 6)), 0.0, 1e-14);
    // Partial trace cannot increase trace distance.
    EXPECT_LE(reduced_trace_distance(psi, phi, Subregion(0b101, 6)), pure_trace_distance(psi, phi) + 1e-12);
    set_spin_cap(16);
    Statevector big{15, std::vector<cplx>(std::size_t{1} << 15, cplx{})};
    big.amplitudes[0] = 1.0;
    try {
        (void)reduced_trace_distance(big, big, Subregion(low_mask(14), 15));
        FAIL() << "oversized region accepted";
    } catch(const Error &e) { EXPECT_EQ(e.code(), Errc::capacity); }
    set_spin_cap(kDefaultMaxSpins);
}

TEST(FannesAudenaert, Values) {
    EXPECT_EQ(fannes_audenaert_bound(0.0, 3), 0.0);
    EXPECT_NEAR(fannes_audenaert_bound(0.5, 1), std::log(2.0), 1e-15);
    EXPECT_NEAR(fannes_audenaert_bound(0.25, 2), 0.25 * std::log(3.0) + binary_entropy(0.25), 1e-15);
    EXPECT_NEAR(fannes_audenaert_bound(0.25, 2), 0.8370, 1e-4);
    EXPECT_THROW((void)fannes_audenaert_bound(1.5, 2), Error);
}

TEST(FannesAudenaert, HoldsOnRandomPairs) {
    RngStream rng(8, 8);
    for(int trial = 0; trial < 20; ++trial) {
        const auto psi = haar_state(6, rng);
        // Nearby state: psi + small perturbation, so T spans small and large values.
        auto near = psi.amplitudes;
        for(auto &a : near) a += 0.05 * trial * cplx{rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)} / 8.0;
        const auto phi = normalize_amplitudes(6, near, 1);
        for(std::uint64_t mask : {0x1ull, 0x6ull, 0x15ull}) {
            const Subregion A(mask, 6);
            const double    T  = reduced_trace_distance(psi, phi, A);
            const double    dS = std::abs(subregion_entropy(psi, A).entropy - subregion_entropy(phi, A).entropy);
            EXPECT_LE(dS, fannes_audenaert_bound(T, A.size()) + 1e-12);
        }
    }
}

TEST(Page, HaarAverageMatchesFormula) {
    RngStream rng(77, 0);
    double    acc = 0.0;
    const int N   = 10000;
    for(int i = 0; i < N; ++i) acc += subregion_entropy(haar_state(2, rng), Subregion(0b01, 2)).entropy;
    EXPECT_NEAR(acc / N, page_value(1, 2), 0.01);
    EXPECT_NEAR(page_value(1, 2), 1.0 / 3.0, 1e-14);
}

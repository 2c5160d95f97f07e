// SPDX-License-Identifier: Apache-2.0

#include "nqs/ansatz.hpp"
#include "nqs/approx.hpp"
#include "nqs/entanglement.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace nqs;

TEST(Chebyshev, RecoversT3AndSquare) {
    const auto t3 = cheb_fit_1d([](double x) { return cplx{4 * x * x * x - 3 * x, 0.0}; }, 1.0, 3);
    const std::vector<double> want{0.0, 0.0, 0.0, 1.0};
    for(int j = 0; j <= 3; ++j) EXPECT_NEAR(std::abs(t3.coeffs[static_cast<std::size_t>(j)] - want[static_cast<std::size_t>(j)]), 0.0, 1e-14);
    EXPECT_LT(t3.error_empirical, 1e-14);
    const auto sq = cheb_fit_1d([](double x) { return cplx{x * x, 0.0}; }, 1.0, 4);
    EXPECT_NEAR(sq.coeffs[0].real(), 0.5, 1e-15);
    EXPECT_NEAR(sq.coeffs[2].real(), 0.5, 1e-15);
    EXPECT_NEAR(std::abs(sq.coeffs[1]) + std::abs(sq.coeffs[3]) + std::abs(sq.coeffs[4]), 0.0, 1e-15);
}

TEST(Chebyshev, RespectsDomainScaling) {
    const auto f = cheb_fit_1d([](double t) { return cplx{std::sin(t), std::cos(t)}; }, 3.0, 30);
    for(double t : {-3.0, -1.2, 0.0, 2.9}) EXPECT_NEAR(std::abs(f.evaluate(t) - cplx{std::sin(t), std::cos(t)}), 0.0, 1e-13);
}

TEST(Chebyshev, MultivariatePolynomialIsExact) {
    const MultiFunction G = [](std::span<const double> t) { return cplx{t[0] * t[0] * t[1] - 2.0 * t[1], t[0]}; };
    const auto          c = cheb_fit_multi(G, {1.5, 0.7}, 3);
    EXPECT_LT(c.error_empirical, 1e-13);
    EXPECT_THROW((void)cheb_fit_multi(G, {1, 1, 1, 1, 1}, 2), Error);
}

TEST(Chebyshev, CertifiedBoundDominatesError) {
    const Activation act(ActivationId::tanh);
    for(int d : {4, 8, 16}) {
        const auto p = best_params_1d(act, 2.0, false, d);
        ASSERT_TRUE(p.has_value());
        const auto f = cheb_fit_1d([&](double t) { return nqs::apply(act, t); }, 2.0, d, p);
        ASSERT_TRUE(f.error_bound.has_value());
        EXPECT_LE(f.error_empirical, *f.error_bound);
    }
    EXPECT_FALSE(best_params_1d(Activation(ActivationId::relu), 1.0, false, 4).has_value());
}

TEST(Chebyshev, ExpOfTanhEllipseAvoidsPoles) {
    const auto p = analyticity_params(Activation(ActivationId::tanh), 1.0, true);
    ASSERT_TRUE(p.has_value());
    EXPECT_LT(std::sinh(p->a), std::numbers::pi / 2.0);
    // Reference sup from an independent dense boundary scan.
    double best = 0.0;
    for(int j = 0; j < 20000; ++j) best = std::max(best, std::abs(std::exp(std::tanh(bernstein_point(p->a, 2 * std::numbers::pi * j / 20000.0)))));
    EXPECT_NEAR(p->C, 1.1 * best, 1e-3 * best);
}

TEST(Bounds, RankBound) {
    EXPECT_EQ(rank_bound(2, 1), 6);
    EXPECT_EQ(rank_bound(0, 5), 1);
    EXPECT_EQ(rank_bound(3, 2), 100);
    EXPECT_EQ(rank_bound(40, 30).str().size(), 89u); // 861^30 needs big integers
}

TEST(Bounds, DegreeFormulas) {
    EXPECT_EQ(degree_for_n(10, std::numbers::ln2, 1.0), 12);
    EXPECT_EQ(degree_for_n(10, std::numbers::ln2, 1e-300), 0);
    EXPECT_EQ(degree_for_n_multi(10, 2.0, 1.0, 2), 18);
    EXPECT_LE(degree_for_n_multi(10, 4.0, 1.0, 2), degree_for_n_multi(10, 2.0, 1.0, 2));
    EXPECT_THROW((void)degree_for_n_multi(10, 1.0, 1.0, 2), Error);
}

TEST(Bounds, PolyMlp) {
    EXPECT_NEAR(poly_mlp_bound(1, 1, 2), std::log(6.0), 1e-15);
    EXPECT_NEAR(poly_mlp_bound(3, 5, 1), 3 * std::log(3.0), 1e-14);
    EXPECT_NEAR(poly_mlp_bound(2, 2, 2), 2 * std::log(15.0), 1e-14);
}

TEST(Monomial, ChebyshevRows) {
    const auto M = chebyshev_to_monomial_matrix(3);
    EXPECT_EQ(M[2], (std::vector<double>{-1, 0, 2, 0}));
    EXPECT_EQ(M[3], (std::vector<double>{0, -3, 0, 4}));
}

TEST(Monomial, ExpansionAgreesWithChebyshev) {
    const MultiFunction G = [](std::span<const double> t) { return std::exp(cplx{0.3 * t[0], t[1]}) * std::tanh(t[0] - 0.2 * t[1]); };
    const auto          c = cheb_fit_multi(G, {1.0, 1.0}, 12);
    const auto          alpha = monomial_expand(c);
    detail::for_each_grid_point(2, 41, [&](std::span<const double> x) {
        EXPECT_NEAR(std::abs(evaluate_monomial(alpha, 2, 12, x) - c.evaluate_scaled(x)), 0.0, 1e-9);
    });
    const auto big = cheb_fit_1d([](double x) { return cplx{x, 0.0}; }, 1.0, kMaxMonomialDegree + 1);
    try {
        (void)monomial_expand(big);
        FAIL() << "degree limit not enforced";
    } catch(const Error &e) { EXPECT_EQ(e.code(), Errc::degree); }
}

TEST(Auxiliary, ExactFitReproducesPolynomialState) {
    // Psi = p(t) with p quadratic; a degree-2 fit is exact.
    const auto g = ComputationGraph::create(
        4, {Node::nonlinear(1, Activation::polynomial({0.5, 1.0, 0.25}), {{Source::spin(0), 1.0}, {Source::spin(1), 0.5}, {Source::spin(3), -1.0}}, 0.1),
            Node::output(2, {{Source::node(1), 1.0}})});
    const auto r   = feature_reduce(g);
    const auto fit = fit_reduced(r, 2);
    const auto aux = auxiliary_state(r, fit);
    const auto psi = materialize(g);
    EXPECT_LT(two_norm_distance(psi, aux), 1e-12);
    ASSERT_TRUE(fit.certificate.has_value());
    EXPECT_TRUE(fit.certificate->exact_polynomial);
}

TEST(Auxiliary, QuadraticFitOverDickeFeatureHasRankAtMostSix) {
    // Any degree-2 polynomial of the single Dicke feature t = sum s_i.
    const auto g = build_dicke({8});
    const auto r = feature_reduce(g);
    ASSERT_EQ(r.mu, 1);
    const auto fit = cheb_fit_1d([](double t) { return cplx{1.0 / (1.0 + t * t), 0.1 * t}; }, feature_supnorm(r.features[0]), 2);
    const auto aux = auxiliary_state(r, fit);
    for(std::uint64_t mask = 1; mask < 255; ++mask) EXPECT_LE(subregion_entropy(aux, Subregion(mask, 8)).schmidt_rank, 6);
}

TEST(BoundReport, PolynomialStateHasNoSlack) {
    const auto g = ComputationGraph::create(
        6, {Node::nonlinear(1, Activation::polynomial({0.3, 0.0, 1.0}), {{Source::spin(0), 0.4}, {Source::spin(2), 1.0}, {Source::spin(5), -0.7}}, 0.2),
            Node::output(2, {{Source::node(1), 1.0}})});
    const auto rep = full_bound_report(g, Subregion(0b000111, 6), 2);
    EXPECT_TRUE(rep.certified);
    EXPECT_EQ(rep.eps_poly, 0.0);
    EXPECT_EQ(rep.fa_slack, 0.0);
    EXPECT_NEAR(rep.entropy_bound_final, std::log(6.0), 1e-14);
    EXPECT_GE(rep.entropy_bound_final, rep.measured_entropy);
}

TEST(BoundReport, ReluIsEmpiricalOnly) {
    SnnqsSpec spec;
    spec.n          = 6;
    spec.activation = Activation(ActivationId::relu);
    RngStream  rng(2, 2);
    const auto rep = full_bound_report(build_snnqs(spec, rng), Subregion(0b111, 6), 6);
    EXPECT_FALSE(rep.certified);
    EXPECT_TRUE(rep.empirical_only);
    EXPECT_FALSE(rep.certificate.has_value());
}

TEST(BoundReport, SmoothStateBoundDominatesEntropy) {
    SnnqsSpec spec;
    spec.n          = 8;
    spec.activation = Activation(ActivationId::sin);
    RngStream  rng(3, 3);
    const auto g   = build_snnqs(spec, rng);
    const auto rep = full_bound_report(g, Subregion(0b1111, 8), std::nullopt);
    EXPECT_TRUE(rep.certified);
    EXPECT_GE(rep.entropy_bound_final, rep.measured_entropy);
    EXPECT_LE(rep.measured_delta_norm, rep.delta_norm_bound);
    EXPECT_LE(rep.d, kAutoDegreeCap);
}

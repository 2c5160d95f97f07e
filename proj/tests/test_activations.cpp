// SPDX-License-Identifier: Apache-2.0

#include "nqs/activations.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace nqs;

TEST(Activation, ComplexModes) {
    const double x = 0.3;
    EXPECT_NEAR(std::abs(nqs::apply(Activation(ActivationId::tanh), x) - cplx{std::tanh(x), 0.0}), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(nqs::apply(Activation(ActivationId::tanh, ComplexMode::imag_only), x) - cplx{0.0, std::tanh(x)}), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(nqs::apply(Activation(ActivationId::sin, ComplexMode::mixed), x) - cplx{std::sin(x), std::sin(x)}), 0.0, 1e-15);
    const auto p = Activation::pair({ActivationId::cos}, {ActivationId::sin});
    EXPECT_NEAR(std::abs(nqs::apply(p, x) - std::exp(cplx{0.0, x})), 0.0, 1e-15);
}

TEST(Activation, RealFunctions) {
    EXPECT_DOUBLE_EQ(nqs::apply(Activation(ActivationId::relu), -2.0).real(), 0.0);
    EXPECT_DOUBLE_EQ(nqs::apply(Activation(ActivationId::relu), 2.0).real(), 2.0);
    EXPECT_NEAR(nqs::apply(Activation::softplus(1.0), 0.0).real(), std::log(2.0), 1e-15);
    EXPECT_NEAR(nqs::apply(Activation::softplus(2.0), 50.0).real(), 50.0, 1e-12); // no overflow for large inputs
    EXPECT_NEAR(nqs::apply(Activation::polynomial({1.0, 2.0, 3.0}), 2.0).real(), 17.0, 1e-14);
    EXPECT_NEAR(nqs::apply(Activation(ActivationId::gelu), 0.0).real(), 0.0, 1e-15);
    EXPECT_NEAR(nqs::apply(Activation(ActivationId::gelu), 10.0).real(), 10.0, 1e-12);
}

TEST(Activation, ComplexArgumentsAreAnalyticContinuations) {
    const cplx z{0.4, 0.3};
    EXPECT_NEAR(std::abs(nqs::apply(Activation(ActivationId::tanh), z) - std::tanh(z)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(nqs::apply(Activation(ActivationId::sin), z) - std::sin(z)), 0.0, 1e-14);
    const cplx sp = nqs::apply(Activation::softplus(1.0), z);
    EXPECT_NEAR(std::abs(sp - std::log(1.0 + std::exp(z))), 0.0, 1e-14);
}

TEST(Activation, NamesRoundTrip) {
    for(auto id : {ActivationId::identity, ActivationId::tanh, ActivationId::sin, ActivationId::cos, ActivationId::relu, ActivationId::gelu,
                   ActivationId::softplus, ActivationId::exp, ActivationId::dicke_delta, ActivationId::poly})
        EXPECT_EQ(activation_from_string(to_string(id)), id);
    EXPECT_THROW((void)activation_from_string("swish"), Error);
    EXPECT_EQ(complex_mode_from_string("imag_only"), ComplexMode::imag_only);
}

TEST(Analyticity, StripWidths) {
    EXPECT_DOUBLE_EQ(*singularity_half_width({ActivationId::tanh}), std::numbers::pi / 2.0);
    EXPECT_DOUBLE_EQ(*singularity_half_width({ActivationId::softplus, 2.0, {}}), std::numbers::pi / 2.0);
    EXPECT_TRUE(std::isinf(*singularity_half_width({ActivationId::sin})));
    EXPECT_FALSE(singularity_half_width({ActivationId::relu}).has_value());
    EXPECT_FALSE(is_certifiable(Activation(ActivationId::gelu)));
    EXPECT_TRUE(is_certifiable(Activation(ActivationId::tanh)));
}

TEST(Analyticity, ParamsKeepMarginFromPoles) {
    const auto p = analyticity_params(Activation(ActivationId::tanh), 2.0);
    ASSERT_TRUE(p.has_value());
    // The ellipse's imaginary semi-axis t_bar sinh(a) stays at 90% of pi/2.
    EXPECT_NEAR(2.0 * std::sinh(p->a), 0.9 * std::numbers::pi / 2.0, 1e-12);
    EXPECT_GT(p->C, 0.0);
    EXPECT_FALSE(analyticity_params(Activation(ActivationId::relu), 1.0).has_value());
    const auto q = analyticity_params(Activation::polynomial({0.0, 1.0, 1.0}), 1.0);
    ASSERT_TRUE(q && q->poly_degree);
    EXPECT_EQ(*q->poly_degree, 2);
}

TEST(Analyticity, EllipseSupOfExpIsAttainedOnRealAxis) {
    // max |e^z| on B(a) is e^{cosh a}; the estimate inflates it by 1.1.
    const double a = 0.7;
    EXPECT_NEAR(ellipse_sup_estimate([](cplx z) { return std::exp(z); }, a), 1.1 * std::exp(std::cosh(a)), 1e-6);
}

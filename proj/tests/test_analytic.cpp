// SPDX-License-Identifier: Apache-2.0

#include "nqs/analytic.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace nqs;

namespace {

/// sum_{k = 2^(n-m) + 1}^{2^n} 1/k - (2^m - 1) / 2^(n-m+1), m <= n - m.
double page_by_sum(int m, int n) {
    m              = std::min(m, n - m);
    const long D   = 1L << n;
    const long B   = 1L << (n - m);
    long double s  = 0.0L;
    for(long k = D; k > B; --k) s += 1.0L / static_cast<long double>(k);
    return static_cast<double>(s) - (std::ldexp(1.0, m) - 1.0) / (2.0 * static_cast<double>(B));
}

} // namespace

TEST(Dicke, SmallSpectra) {
    const auto s4 = dicke_spectrum(4, 2);
    ASSERT_EQ(s4.eigenvalues.size(), 3u);
    EXPECT_NEAR(s4.eigenvalues[0], 1.0 / 6.0, 1e-16);
    EXPECT_NEAR(s4.eigenvalues[1], 4.0 / 6.0, 1e-16);
    EXPECT_NEAR(s4.eigenvalues[2], 1.0 / 6.0, 1e-16);
    EXPECT_TRUE(s4.exact && s4.sum_is_one);
    const auto s2 = dicke_spectrum(2, 1);
    EXPECT_EQ(s2.eigenvalues, (std::vector<double>{0.5, 0.5}));
    EXPECT_NEAR(dicke_entropy(2, 1), std::log(2.0), 1e-16);
    EXPECT_NEAR(dicke_entropy(4, 2), 0.8675, 1e-4);
}

TEST(Dicke, ExactSpectraSumToOne) {
    for(int n = 2; n <= 64; n += 2)
        for(int m = 1; m < n; ++m) ASSERT_TRUE(dicke_spectrum(n, m).sum_is_one) << n << " " << m;
}

TEST(Dicke, LargeNSpectrumIsNormalized) {
    const auto s = dicke_spectrum(1000, 500);
    EXPECT_FALSE(s.exact);
    double total = 0.0;
    for(double l : s.eigenvalues) total += l;
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Dicke, SymmetricInSubsystem) {
    for(int m = 1; m < 20; ++m) EXPECT_NEAR(dicke_entropy(20, m), dicke_entropy(20, 20 - m), 1e-13);
}

TEST(Dicke, RejectsOddN) {
    EXPECT_THROW((void)dicke_spectrum(3, 1), Error);
    EXPECT_THROW((void)dicke_spectrum(4, 4), Error);
}

TEST(Dicke, HypergeometricGaussianTracksExact) {
    for(double p : {0.25, 0.5}) EXPECT_NEAR(dicke_entropy_hypergeometric_gaussian(1000, p), dicke_entropy(1000, static_cast<int>(p * 1000)), 0.01);
    EXPECT_TRUE(std::isinf(dicke_entropy_asymptotic(100, 0.0)));
    EXPECT_LT(dicke_entropy_asymptotic(100, 0.0), 0.0);
}

TEST(Page, DigammaMatchesHarmonicSum) {
    for(int n = 2; n <= 16; ++n)
        for(int m = 1; m < n; ++m) EXPECT_NEAR(page_value(m, n), page_by_sum(m, n), 1e-12) << m << " " << n;
}

TEST(Page, Limits) {
    EXPECT_NEAR(page_value(1, 2), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(page_value(2, 40), 2.0 * std::numbers::ln2, 1e-6);
    EXPECT_EQ(page_value(3, 10), page_value(7, 10));
    EXPECT_THROW((void)page_value(0, 10), Error);
}

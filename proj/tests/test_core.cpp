// SPDX-License-Identifier: Apache-2.0

#include "nqs/core.hpp"
#include "nqs/parallel.hpp"

#include <gtest/gtest.h>

#include <atomic>

using namespace nqs;

TEST(SpinConfig, BitSetMeansPlusOne) {
    const SpinConfig s{0b101, 3};
    EXPECT_EQ(s.spin(0), 1);
    EXPECT_EQ(s.spin(1), -1);
    EXPECT_EQ(s.spin(2), 1);
    EXPECT_EQ(s.values(), (std::vector<double>{1.0, -1.0, 1.0}));
}

TEST(SpinConfig, EnumerationCoversAllConfigs) {
    std::uint64_t expected = 0;
    for(const auto &s : enumerate_configs(4)) {
        EXPECT_EQ(s.bits, expected++);
        EXPECT_EQ(s.n, 4);
    }
    EXPECT_EQ(expected, 16u);
}

TEST(SpinCap, RejectsOutOfRangeCounts) {
    EXPECT_NO_THROW(check_spin_count(spin_cap()));
    EXPECT_THROW(check_spin_count(spin_cap() + 1), Error);
    EXPECT_THROW(check_spin_count(0), Error);
    EXPECT_THROW(set_spin_cap(kHardMaxSpins + 1), Error);
    try {
        check_spin_count(spin_cap() + 1);
    } catch(const Error &e) { EXPECT_EQ(e.code(), Errc::capacity); }
}

TEST(Subregion, ContiguousWrapsAround) {
    const auto A = Subregion::contiguous(6, 3, 8);
    EXPECT_EQ(A.indices(), (std::vector<int>{0, 6, 7}));
    EXPECT_EQ(A.size(), 3);
    EXPECT_EQ(A.complement().mask, 0b00111110u);
}

TEST(Subregion, FromIndicesRejectsOutOfRange) {
    const std::vector<int> ok{0, 3};
    EXPECT_EQ(Subregion::from_indices(ok, 4).mask, 0b1001u);
    const std::vector<int> bad{5};
    EXPECT_THROW((void)Subregion::from_indices(bad, 4), Error);
}

TEST(AffineFeature, SupNormAndSplit) {
    const AffineFeature f{{0.5, -1.0, 2.0}, 0.25};
    EXPECT_DOUBLE_EQ(feature_supnorm(f), 3.75);
    const auto A     = Subregion::from_indices(std::vector<int>{1}, 3);
    const auto split = split_feature(f, A);
    for(const auto &s : enumerate_configs(3)) EXPECT_NEAR(split.evaluate(s), f.evaluate(s), 1e-15);
    EXPECT_DOUBLE_EQ(split.x_part.weights[1], -1.0);
    EXPECT_DOUBLE_EQ(split.x_part.weights[0], 0.0);
    EXPECT_DOUBLE_EQ(split.x_part.bias, 0.125);
    // The supremum over the hypercube is attained at some configuration.
    double best = 0.0;
    for(const auto &s : enumerate_configs(3)) best = std::max(best, std::abs(f.evaluate(s)));
    EXPECT_DOUBLE_EQ(best, feature_supnorm(f));
}

TEST(AffineFeature, SplitRejectsSizeMismatch) {
    const AffineFeature f{{1.0, 1.0}, 0.0};
    EXPECT_THROW((void)split_feature(f, Subregion(1, 3)), Error);
}

TEST(Rng, StreamsAreReproducibleAndIndependent) {
    RngStream a(7, stream_key({1, 2})), b(7, stream_key({1, 2})), c(7, stream_key({1, 3}));
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(RngStream(7, 1).child(1).next_u64(), RngStream(7, 1).child(2).next_u64());
}

TEST(MaskHex, RoundTrip) {
    EXPECT_EQ(mask_to_hex(0xf0), "0xf0");
    EXPECT_EQ(parse_mask_hex("0xF0"), 0xf0u);
    EXPECT_EQ(parse_mask_hex("3"), 3u);
    EXPECT_THROW((void)parse_mask_hex("0xzz"), Error);
}

TEST(Parallel, RunsEveryIndexOnceAndRethrowsLowest) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for(const auto &h : hits) EXPECT_EQ(h.load(), 1);
    try {
        parallel_for(50, 3, [](std::size_t i) {
            if(i == 7 || i == 31) fail(Errc::numeric, "index " + std::to_string(i));
        });
        FAIL() << "expected an exception";
    } catch(const Error &e) { EXPECT_STREQ(e.what(), "index 7"); }
}

#include <gtest/gtest.h>

#include <cmath>

#include "fracwave/error.hpp"
#include "fracwave/sigma.hpp"

using fracwave::DomainError;
using fracwave::SigmaSpec;

TEST(Sigma, ConstantAndAffineKinds) {
    const auto c = SigmaSpec::constant(2.5);
    EXPECT_EQ(c(-3.0), 2.5);
    EXPECT_EQ(c.lipschitz(), 0.0);
    EXPECT_TRUE(c.is_constant());
    EXPECT_FALSE(c.degenerate());

    const auto lin = SigmaSpec::linear();
    EXPECT_EQ(lin(1.75), 1.75);
    EXPECT_TRUE(lin.is_linear());
    EXPECT_EQ(lin.lipschitz(), 1.0);
    EXPECT_EQ(lin, SigmaSpec::affine(0.0, 1.0));

    const auto shifted = SigmaSpec::affine(-1.0, 1.0);
    EXPECT_EQ(shifted(1.0), 0.0);
    EXPECT_TRUE(shifted.degenerate());
    EXPECT_FALSE(shifted.is_linear());
    EXPECT_EQ(SigmaSpec::affine(2.0, -3.0).lipschitz(), 3.0);
}

TEST(Sigma, AffineSine) {
    const auto s = SigmaSpec::affine_sine(1.0, 0.5);
    EXPECT_DOUBLE_EQ(s(0.3), 1.0 + 0.5 * std::sin(0.3));
    EXPECT_EQ(s.lipschitz(), 0.5);
    EXPECT_DOUBLE_EQ(s.sigma_at_one(), 1.0 + 0.5 * std::sin(1.0));
    EXPECT_EQ(s.describe(), "affine_sine(1,0.5)");
}

TEST(Sigma, TabulatedInterpolatesAndClamps) {
    const auto t = SigmaSpec::tabulated({0.0, 1.0, 3.0}, {1.0, 2.0, 0.0});
    EXPECT_EQ(t(-5.0), 1.0);
    EXPECT_EQ(t(0.5), 1.5);
    EXPECT_EQ(t(1.0), 2.0);
    EXPECT_EQ(t(2.0), 1.0);
    EXPECT_EQ(t(9.0), 0.0);
    EXPECT_EQ(t.lipschitz(), 1.0);
    EXPECT_EQ(t.sigma_at_one(), 2.0);
    EXPECT_TRUE(t.spot_check_lipschitz(10000, 3));
}

TEST(Sigma, LipschitzSpotCheckAllKinds) {
    for (const auto& s : {SigmaSpec::constant(1.0), SigmaSpec::linear(), SigmaSpec::affine(0.3, -2.0),
                          SigmaSpec::affine_sine(1.0, 0.5),
                          SigmaSpec::tabulated({-1.0, 0.0, 0.5, 4.0}, {0.0, 3.0, -1.0, 2.0})}) {
        EXPECT_TRUE(s.spot_check_lipschitz(5000, 17)) << s.describe();
    }
}

TEST(Sigma, DegeneracyFlag) {
    EXPECT_TRUE(SigmaSpec::constant(0.0).degenerate());
    EXPECT_TRUE(SigmaSpec::affine_sine(-std::sin(1.0), 1.0).degenerate());
    EXPECT_TRUE(SigmaSpec::tabulated({0.0, 2.0}, {-1.0, 1.0}).degenerate());
    EXPECT_FALSE(SigmaSpec::linear().degenerate());
}

TEST(Sigma, RejectsInvalidSpecs) {
    EXPECT_THROW(SigmaSpec::tabulated({0.0}, {1.0}), DomainError);
    EXPECT_THROW(SigmaSpec::tabulated({0.0, 1.0}, {1.0}), DomainError);
    EXPECT_THROW(SigmaSpec::tabulated({1.0, 1.0}, {1.0, 2.0}), DomainError);
    EXPECT_THROW(SigmaSpec::constant(std::nan("")), DomainError);
    EXPECT_THROW(SigmaSpec::affine(1.0, INFINITY), DomainError);
}

TEST(Sigma, Describe) {
    EXPECT_EQ(SigmaSpec::linear().describe(), "linear");
    EXPECT_EQ(SigmaSpec::constant(1.0).describe(), "constant(1)");
}

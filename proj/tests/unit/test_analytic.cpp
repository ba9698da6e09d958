#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fracwave/analytic.hpp"
#include "fracwave/error.hpp"
#include "oracles.hpp"

using namespace fracwave;

TEST(Analytic, AlphaH) {
    EXPECT_EQ(alpha_h(0.5), 0.0);
    EXPECT_DOUBLE_EQ(alpha_h(0.75), 0.375);
}

TEST(ConeInnerProduct, ExamplesAndDomain) {
    EXPECT_NEAR(cone_inner_product(0.0, 0.0, 1.0, 1.0, 0.75), 2.0 * std::pow(2.0, 1.5), 1e-12);
    const double far = std::pow(8.0, 1.5) + std::pow(12.0, 1.5) - 2.0 * std::pow(10.0, 1.5);
    EXPECT_NEAR(cone_inner_product(10.0, 0.0, 1.0, 1.0, 0.75), far, 1e-12);
    EXPECT_NEAR(far, 0.9511, 1e-4);
    EXPECT_THROW(cone_inner_product(0, 0, 1, 1, 0.5), DomainError);
    EXPECT_THROW(cone_inner_product(0, 0, -1, 1, 0.7), DomainError);
}

TEST(ConeInnerProduct, MatchesTwoDimensionalQuadrature) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pos(-3.0, 3.0);
    std::uniform_real_distribution<double> len(0.05, 2.0);
    std::uniform_real_distribution<double> hu(0.55, 0.95);
    for (int k = 0; k < 20; ++k) {
        const double x = pos(rng), xi = pos(rng), t = len(rng), s = len(rng), h = hu(rng);
        const double closed = cone_inner_product(x, xi, t, s, h);
        const double quad = oracle::cone_product_quadrature(x, xi, t, s, h);
        EXPECT_NEAR(closed, quad, 1e-6 * std::abs(quad)) << x << ' ' << xi << ' ' << t << ' ' << s << ' ' << h;
    }
}

TEST(WhiteConeOverlap, TwiceTheOverlapLength) {
    EXPECT_EQ(white_cone_overlap(0.0, 0.0, 1.0, 1.0), 4.0);
    EXPECT_EQ(white_cone_overlap(0.0, 1.5, 1.0, 1.0), 1.0);
    EXPECT_EQ(white_cone_overlap(0.0, 5.0, 1.0, 1.0), 0.0);
    EXPECT_EQ(interval_inner_product(0.0, 1.5, 1.0, 1.0, 0.5), 0.5);
    EXPECT_NEAR(interval_inner_product(0.0, 0.0, 1.0, 1.0, 0.75), std::pow(2.0, 1.5), 1e-12);
}

TEST(PhiR, PiecewiseValues) {
    EXPECT_EQ(phi_r(0.0, 0.0, 1.0, 5.0), 1.0);
    EXPECT_EQ(phi_r(0.0, 6.0, 1.0, 5.0), 0.0);
    EXPECT_EQ(phi_r(0.0, 5.0, 1.0, 5.0), 0.5);
    EXPECT_EQ(phi_r(1.0, 0.0, 1.0, 5.0), 0.0);
    for (double y = -8.0; y <= 8.0; y += 0.37) {
        const double v = phi_r(0.3, y, 2.0, 3.0);
        EXPECT_LE(v, std::min(3.0, 1.7) + 1e-15);
        if (std::abs(y) >= 3.0 + 1.7) EXPECT_EQ(v, 0.0);
    }
    EXPECT_THROW(phi_r(1.5, 0.0, 1.0, 1.0), DomainError);
    EXPECT_THROW(phi_r(0.0, 0.0, 1.0, 0.0), DomainError);
}

TEST(PhiOverlap, ExamplesAndQuadrature) {
    EXPECT_NEAR(phi_overlap(1.0, 2.0, 4.0), 3.4583333333333333, 1e-15);
    EXPECT_NEAR(phi_overlap(1.0, 1.0, 2.0), 5.0 / 3.0, 1e-15);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 3.0);
    for (int k = 0; k < 20; ++k) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        const double r = 2.0 * b + u(rng) * 3.0;
        EXPECT_NEAR(phi_overlap(a, b, r), oracle::phi_overlap_quadrature(a, b, r), 1e-9 * phi_overlap(a, b, r));
    }
    EXPECT_THROW(phi_overlap(1.0, 2.0, 3.0), DomainError);
    EXPECT_THROW(phi_overlap(2.0, 1.0, 8.0), DomainError);
}

TEST(MomentCurves, ConstantLinearEmpirical) {
    const auto c = MomentCurves::constant(2.0);
    EXPECT_EQ(c.eta(0.7), 2.0);
    EXPECT_EQ(c.xi(0.7), 4.0);
    const auto lin = MomentCurves::linear(0.5);
    EXPECT_TRUE(lin.has_xi());
    EXPECT_NEAR(lin.xi(1.0), std::cosh(1.0 / std::sqrt(2.0)), 1e-15);
    EXPECT_FALSE(MomentCurves::linear(0.75).has_xi());
    EXPECT_EQ(MomentCurves::linear(0.75).eta(0.3), 1.0);

    const auto e = MomentCurves::empirical({0.0, 1.0}, {1.0, 3.0}, {2.0, 10.0}, {0.1, 0.2}, {0.3, 0.4});
    EXPECT_EQ(e.provenance, MomentCurves::Provenance::empirical);
    EXPECT_DOUBLE_EQ(e.eta(0.5), 2.0);
    EXPECT_DOUBLE_EQ(e.xi(0.25), 4.0);
    EXPECT_DOUBLE_EQ(e.eta(5.0), 3.0);
    EXPECT_DOUBLE_EQ(e.eta_se(0.5), 0.15);
    EXPECT_THROW(MomentCurves::empirical({0.0}, {1.0}, {1.0}, {0.0}, {0.0}), DomainError);
}

TEST(MomentCurves, CauchySchwarz) {
    EXPECT_TRUE(satisfies_cauchy_schwarz(MomentCurves::constant(1.5), 1.0, 50));
    EXPECT_TRUE(satisfies_cauchy_schwarz(MomentCurves::linear(0.5), 3.0, 50));
    const auto bad = MomentCurves::empirical({0.0, 1.0}, {2.0, 2.0}, {1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0});
    EXPECT_FALSE(satisfies_cauchy_schwarz(bad, 1.0, 10));
}

TEST(AsymptoticVariance, Examples) {
    EXPECT_NEAR(asymptotic_variance(1.0, 0.5, MomentCurves::constant(1.0)), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(asymptotic_variance(1.0, 0.75, MomentCurves::linear(0.75)), std::pow(4.0, 0.75) / 3.0, 1e-12);
    const double simpson = 2.0 * oracle::simpson([](double s) { return (1 - s) * (1 - s) * oracle::cosh_series(s); },
                                                 0.0, 1.0, 2000);
    EXPECT_NEAR(asymptotic_variance(1.0, 0.5, MomentCurves::linear(0.5)), simpson, 1e-12);
    EXPECT_NEAR(simpson, 0.683533, 1e-6);
    EXPECT_THROW(asymptotic_variance(1.0, 0.5, MomentCurves::linear(0.75)), DomainError);
}

TEST(CrossCovariance, DiagonalZeroAndPolynomial) {
    const auto one = MomentCurves::constant(1.0);
    EXPECT_NEAR(cross_covariance(0.8, 0.8, 0.5, one), asymptotic_variance(0.8, 0.5, one), 1e-14);
    EXPECT_EQ(cross_covariance(0.0, 1.0, 0.5, one), 0.0);
    // 2∫₀^{1/2}(1/2 − s)(1 − s) ds = 5/24.
    const double poly = 2.0 * oracle::simpson([](double s) { return (0.5 - s) * (1 - s); }, 0.0, 0.5, 2);
    EXPECT_NEAR(poly, 5.0 / 24.0, 1e-15);
    EXPECT_NEAR(cross_covariance(0.5, 1.0, 0.5, one), poly, 1e-12);
    EXPECT_NEAR(cross_covariance(1.0, 0.5, 0.5, one), poly, 1e-12);
    EXPECT_NEAR(cross_covariance(0.5, 1.0, 0.75, one),
                std::pow(2.0, 1.5) * oracle::simpson([](double s) { return (0.5 - s) * (1 - s); }, 0.0, 0.5, 2), 1e-12);
}

TEST(PrelimitVariance, ExamplesAndLowerBound) {
    const auto one = MomentCurves::constant(1.0);
    EXPECT_NEAR(prelimit_variance_white(1.0, 2.0, one), 7.0 / 6.0, 1e-12);
    EXPECT_NEAR(prelimit_variance_white(1.0, 1e6, one) / 1e6, 2.0 / 3.0, 1e-6);
    const auto lin = MomentCurves::linear(0.5);
    for (double t : {0.25, 1.0, 2.0}) {
        for (double r : {2.0 * t, 3.0 * t, 10.0}) {
            if (r < 2 * t) continue;
            EXPECT_GE(prelimit_variance_white(t, r, lin), prelimit_lower_bound_white(t, r, lin));
            EXPECT_GE(prelimit_variance_white(t, r, one), prelimit_lower_bound_white(t, r, one));
        }
    }
    // Independent route: ∫₀ᵗ ξ(s)·R·phi_overlap(t − s, t − s, R) ds by Simpson.
    const double r = 4.0;
    const double route = oracle::simpson(
        [&](double s) { return s >= 1.0 ? 0.0 : oracle::cosh_series(s) * r * oracle::phi_overlap_quadrature(1 - s, 1 - s, r); },
        0.0, 1.0, 400);
    EXPECT_NEAR(prelimit_variance_white(1.0, r, lin), route, 1e-9);
    EXPECT_THROW(prelimit_variance_white(1.0, 1.5, one), DomainError);
    EXPECT_THROW(prelimit_lower_bound_white(1.0, 1.5, one), DomainError);
}

TEST(Volterra, ClosedFormAndStepper) {
    EXPECT_EQ(volterra_xi_linear(0.0), 1.0);
    EXPECT_NEAR(volterra_xi_linear(1.0), 1.260592, 1e-6);
    EXPECT_NEAR(volterra_xi_linear(1.0), oracle::cosh_series(1.0), 1e-15);
    EXPECT_NEAR(volterra_xi_linear_stepped(1.0), volterra_xi_linear(1.0), 1e-6);
    EXPECT_NEAR(volterra_xi_linear_stepped(3.0, 1e-3), volterra_xi_linear(3.0), 1e-6);
    EXPECT_EQ(volterra_xi_linear_stepped(0.0), 1.0);
    double prev = 1.0;
    for (double t = 0.0; t <= 4.0; t += 0.1) {
        const double m = volterra_xi_linear_stepped(t, 1e-2);
        EXPECT_GE(m, 1.0);
        EXPECT_GE(m, prev);
        prev = m;
    }
    // m satisfies m(t) = 1 + ½∫(t − s)m(s)ds.
    const double t = 1.3;
    const double rhs = 1.0 + 0.5 * oracle::simpson([&](double s) { return (t - s) * volterra_xi_linear(s); }, 0.0, t, 400);
    EXPECT_NEAR(volterra_xi_linear(t), rhs, 1e-10);
    EXPECT_THROW(volterra_xi_linear_stepped(1.0, 0.0), DomainError);
    EXPECT_THROW(volterra_xi_linear(-1.0), DomainError);
}

TEST(FirstChaos, WhiteClosedForm) {
    EXPECT_NEAR(first_chaos_variance(1.0, 2.0, 0.5), 7.0 / 6.0, 1e-15);
    EXPECT_EQ(first_chaos_variance(0.0, 2.0, 0.5), 0.0);
    EXPECT_LT(first_chaos_variance(1e-4, 2.0, 0.5), 1e-11);
    EXPECT_THROW(first_chaos_variance(1.0, 1.0, 0.5), DomainError);
    EXPECT_NEAR(first_chaos_covariance(1.0, 1.0, 2.0, 0.5), 7.0 / 6.0, 1e-12);
    EXPECT_NEAR(first_chaos_covariance(0.5, 1.0, 3.0, 0.5), oracle::white_cov_quadrature(0.5, 1.0, 3.0), 1e-10);
    // R < 2t has no polynomial form, but the quadrature route still applies.
    EXPECT_NEAR(first_chaos_covariance(1.0, 1.0, 0.7, 0.5), oracle::white_cov_quadrature(1.0, 1.0, 0.7), 1e-10);
}

TEST(FirstChaos, FractionalMatchesConeQuadrature) {
    // E I₁² = ∫₀ᵗ ‖φ_R(s, ·)‖²_H ds with the spatial norm by 2-D quadrature.
    const double hurst = 0.7, t = 1.0, r = 1.5;
    const double alpha = alpha_h(hurst);
    const auto spatial = [&](double s) {
        const double a = t - s;
        const auto phi = [&](double y) { return oracle::half_overlap(y, a, r); };
        const double lim = r + a;
        const std::vector<double> kinks{-r - a, -r + a, r - a, r + a};
        const auto inner = [&](double y) {
            const auto kd = [&](double d) { return std::pow(d, 2 * hurst - 2); };
            std::vector<double> left, right;
            for (double k : kinks) {
                left.push_back(y - k);
                right.push_back(k - y);
            }
            return oracle::ts_pieces([&](double d) { return phi(y - d) * kd(d); }, 0.0, y + lim, left) +
                   oracle::ts_pieces([&](double d) { return phi(y + d) * kd(d); }, 0.0, lim - y, right);
        };
        return alpha * oracle::ts_pieces([&](double y) { return phi(y) * inner(y); }, -lim, lim, kinks);
    };
    const double quad = oracle::gk(spatial, 0.0, t);
    EXPECT_NEAR(first_chaos_variance(t, r, hurst), quad, 1e-6 * quad);
}

TEST(FirstChaos, FractionalApproachesLimit) {
    const double limit = std::pow(4.0, 0.75) / 3.0;
    double prev_gap = INFINITY;
    for (double r : {8.0, 16.0, 32.0, 64.0}) {
        const double gap = std::abs(first_chaos_variance(1.0, r, 0.75) / std::pow(r, 1.5) - limit);
        EXPECT_LT(gap, prev_gap);
        prev_gap = gap;
    }
    EXPECT_LT(prev_gap, 0.02 * limit);
}

TEST(IncrementVariance, MatchesCovarianceRoute) {
    for (auto [s, t, r] : {std::tuple{0.25, 0.5, 8.0}, std::tuple{0.5, 1.0, 16.0}, std::tuple{0.25, 1.0, 2.0}}) {
        const double route = oracle::white_cov_quadrature(t, t, r) + oracle::white_cov_quadrature(s, s, r) -
                             2.0 * oracle::white_cov_quadrature(s, t, r);
        EXPECT_NEAR(increment_variance_white(s, t, r), route, 1e-9 * route);
    }
    EXPECT_EQ(increment_variance_white(0.5, 0.5, 4.0), 0.0);
    EXPECT_THROW(increment_variance_white(1.0, 0.5, 4.0), DomainError);
}

TEST(AsymptoticConstants, MatrixAndEigenvalue) {
    const std::vector<double> times{0.5, 1.0};
    const auto k = asymptotic_constants(times, 0.5, MomentCurves::constant(1.0));
    EXPECT_EQ(k.alpha_h, 0.0);
    EXPECT_NEAR(k.cov(0, 1), 5.0 / 24.0, 1e-12);
    EXPECT_EQ(k.cov(0, 1), k.cov(1, 0));
    EXPECT_NEAR(k.variance[1], 2.0 / 3.0, 1e-12);
    EXPECT_GT(k.min_eigenvalue, 0.0);
    const double a = k.cov(0, 0), b = k.cov(0, 1), d = k.cov(1, 1);
    const double lmin = 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    EXPECT_NEAR(k.min_eigenvalue, lmin, 1e-12);
}

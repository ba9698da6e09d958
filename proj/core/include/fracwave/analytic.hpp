#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fracwave {

/// α_H = H(2H − 1).
double alpha_h(double hurst);

/// |x−ξ−t−s|^{2H} + |x−ξ+t+s|^{2H} − |x−ξ+t−s|^{2H} − |x−ξ−t+s|^{2H}, which
/// equals 2α_H ∬ 1{|x−y|<=t} 1{|ξ−z|<=s} |y−z|^{2H−2} dy dz. Requires
/// 1/2 < H < 1 (use white_cone_overlap at H = 1/2).
double cone_inner_product(double x, double xi, double t, double s, double hurst);

/// White-noise counterpart of cone_inner_product: twice the length of
/// [x−t, x+t] ∩ [ξ−s, ξ+s].
double white_cone_overlap(double x, double xi, double t, double s);

/// Noise inner product ⟨1[x−t, x+t], 1[ξ−s, ξ+s]⟩ for any H in [1/2, 1).
double interval_inner_product(double x, double xi, double t, double s, double hurst);

/// φ_R(s, y) = ½ |[−R, R] ∩ [y − (t−s), y + (t−s)]|.
double phi_r(double s, double y, double t, double r);

/// ∫ R^{-1} φ_{a,R}(y) φ_{b,R}(y) dy = 2ab − R^{-1}(ab²/2 + a³/6), valid for
/// 0 < a <= b and R >= 2b (DomainError otherwise).
double phi_overlap(double a, double b, double r);

/// η(s) = E σ(u(s,·)) and ξ(s) = E σ²(u(s,·)).
struct MomentCurves {
    enum class Provenance { analytic, empirical };

    std::function<double(double)> eta;
    std::function<double(double)> xi;  ///< empty when no closed form is known
    Provenance provenance = Provenance::analytic;
    /// Standard errors of empirical curves (empty for analytic ones).
    std::function<double(double)> eta_se;
    std::function<double(double)> xi_se;

    bool has_xi() const noexcept { return static_cast<bool>(xi); }

    /// σ ≡ c: η ≡ c, ξ ≡ c².
    static MomentCurves constant(double c);
    /// σ(u) = u: η ≡ 1 for every H; ξ(s) = cosh(s/√2) for H = 1/2 only.
    static MomentCurves linear(double hurst);
    /// Piecewise-linear curves through knots (clamped outside), with
    /// per-knot standard errors.
    static MomentCurves empirical(std::vector<double> knots, std::vector<double> eta,
                                  std::vector<double> xi, std::vector<double> eta_se,
                                  std::vector<double> xi_se);
};

/// ξ(s) >= η(s)² on `points` equispaced points of [0, t].
bool satisfies_cauchy_schwarz(const MomentCurves& curves, double t, std::size_t points);

/// lim R^{-2H} E G_R(t)²: 2∫₀ᵗ(t−s)²ξ(s)ds for H = 1/2 and
/// 2^{2H}∫₀ᵗ(t−s)²η²(s)ds for H > 1/2.
double asymptotic_variance(double t, double hurst, const MomentCurves& curves);

/// lim R^{-2H} E G_R(t_i)G_R(t_j), same two branches with (t_i−s)(t_j−s) on [0, t_i∧t_j].
double cross_covariance(double ti, double tj, double hurst, const MomentCurves& curves);

/// Exact E G_R(t)² for H = 1/2, R >= 2t: ∫₀ᵗ ξ(s)·2R(t−s)²(1 − (t−s)/(3R)) ds.
double prelimit_variance_white(double t, double r, const MomentCurves& curves);
/// The lower bound (5/3)·R·∫₀ᵗ(t−s)²ξ(s)ds, valid for R >= 2t.
double prelimit_lower_bound_white(double t, double r, const MomentCurves& curves);

/// m(t) = E u²(t, x) for σ(u) = u, H = 1/2: the solution cosh(t/√2) of
/// m(t) = 1 + ½∫₀ᵗ(t−s)m(s)ds.
double volterra_xi_linear(double t);
/// Same equation solved by explicit trapezoidal Volterra stepping.
double volterra_xi_linear_stepped(double t, double step = 1e-3);

/// Finite-R first-chaos covariance E[I₁(φ_R^{t_i}) I₁(φ_R^{t_j})] for any H,
/// with the spatial double integral in closed form and the time integral by
/// adaptive quadrature. For σ ≡ 1 this is the exact covariance of G_R.
double first_chaos_covariance(double ti, double tj, double r, double hurst);

/// Variance of the first chaos of G_R(t) for σ(u) = u.
/// H = 1/2: (2/3)Rt³ − t⁴/6, requires R >= 2t. H > 1/2: quadrature.
double first_chaos_variance(double t, double r, double hurst);

/// ∫₀ᵗ∫ (φ_R^{t}(q, y) − φ_R^{s}(q, y) 1{q < s})² dy dq by nested quadrature:
/// E(G_R(t) − G_R(s))² for σ ≡ 1, H = 1/2.
double increment_variance_white(double s, double t, double r);

/// α_H, the per-time asymptotic variance coefficients and the limiting
/// covariance matrix over a time grid.
struct AsymptoticConstants {
    double alpha_h = 0.0;
    std::vector<double> times;
    std::vector<double> variance;    ///< asymptotic_variance(times[i])
    std::vector<double> covariance;  ///< row-major, times.size()²
    double min_eigenvalue = 0.0;

    double cov(std::size_t i, std::size_t j) const { return covariance[i * times.size() + j]; }
};

AsymptoticConstants asymptotic_constants(std::span<const double> times, double hurst,
                                         const MomentCurves& curves);

}  // namespace fracwave

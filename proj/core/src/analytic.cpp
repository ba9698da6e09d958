#include "fracwave/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fracwave/error.hpp"
#include "fracwave/quadrature.hpp"

namespace fracwave {

namespace {

void require_hurst(double hurst) {
    if (!(hurst >= 0.5 && hurst < 1.0)) throw DomainError("analytic: hurst must lie in [1/2, 1)");
}

double pow_abs(double x, double p) { return std::pow(std::abs(x), p); }

// ∫₀^L (L − d)|d − c|^{2H} dd through F'' = |x|^{2H}.
double weighted_power_integral(double length, double c, double two_h) {
    const double k1 = two_h + 1.0;
    const double k2 = (two_h + 1.0) * (two_h + 2.0);
    const auto f = [&](double x) { return pow_abs(x, two_h + 2.0) / k2; };
    const auto df = [&](double x) { return std::copysign(pow_abs(x, two_h + 1.0) / k1, x); };
    return f(length - c) - f(-c) - length * df(-c);
}

// ⟨φ^{a}_R, φ^{b}_R⟩ for half-widths a, b: ¼ ∫₀^{2R} (2R − d) g(d) dd.
double phi_inner(double a, double b, double r, double hurst) {
    const double length = 2.0 * r;
    const double two_h = 2.0 * hurst;
    const double g = weighted_power_integral(length, a + b, two_h) +
                     weighted_power_integral(length, -a - b, two_h) -
                     weighted_power_integral(length, b - a, two_h) -
                     weighted_power_integral(length, a - b, two_h);
    return 0.25 * g;
}

double clamp_interp(const std::vector<double>& knots, const std::vector<double>& values, double s) {
    if (s <= knots.front()) return values.front();
    if (s >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - knots.begin());
    const double w = (s - knots[i - 1]) / (knots[i] - knots[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
}

const std::function<double(double)>& need_xi(const MomentCurves& curves) {
    if (!curves.has_xi()) throw DomainError("analytic: the H = 1/2 branch needs xi(s), which these curves lack");
    return curves.xi;
}

}  // namespace

double alpha_h(double hurst) {
    require_hurst(hurst);
    return hurst * (2.0 * hurst - 1.0);
}

double cone_inner_product(double x, double xi, double t, double s, double hurst) {
    if (!(hurst > 0.5 && hurst < 1.0)) {
        throw DomainError("cone_inner_product: needs 1/2 < H < 1; use white_cone_overlap for H = 1/2");
    }
    if (t < 0.0 || s < 0.0) throw DomainError("cone_inner_product: t and s must be nonnegative");
    const double d = x - xi;
    const double p = 2.0 * hurst;
    return pow_abs(d - t - s, p) + pow_abs(d + t + s, p) - pow_abs(d + t - s, p) - pow_abs(d - t + s, p);
}

double white_cone_overlap(double x, double xi, double t, double s) {
    if (t < 0.0 || s < 0.0) throw DomainError("white_cone_overlap: t and s must be nonnegative");
    const double lo = std::max(x - t, xi - s);
    const double hi = std::min(x + t, xi + s);
    return 2.0 * std::max(0.0, hi - lo);
}

double interval_inner_product(double x, double xi, double t, double s, double hurst) {
    require_hurst(hurst);
    if (hurst == 0.5) return 0.5 * white_cone_overlap(x, xi, t, s);
    return 0.5 * cone_inner_product(x, xi, t, s, hurst);
}

double phi_r(double s, double y, double t, double r) {
    if (!(s >= 0.0 && s <= t)) throw DomainError("phi_r: needs 0 <= s <= t");
    if (!(r > 0.0)) throw DomainError("phi_r: R must be positive");
    const double a = t - s;
    return 0.5 * std::max(0.0, std::min(r, y + a) - std::max(-r, y - a));
}

double phi_overlap(double a, double b, double r) {
    if (!(a > 0.0 && a <= b)) throw DomainError("phi_overlap: needs 0 < a <= b");
    if (r < 2.0 * b) throw DomainError("phi_overlap: formula needs R >= 2b");
    return 2.0 * a * b - (0.5 * a * b * b + a * a * a / 6.0) / r;
}

MomentCurves MomentCurves::constant(double c) {
    MomentCurves m;
    m.eta = [c](double) { return c; };
    m.xi = [c](double) { return c * c; };
    return m;
}

MomentCurves MomentCurves::linear(double hurst) {
    require_hurst(hurst);
    MomentCurves m;
    m.eta = [](double) { return 1.0; };
    if (hurst == 0.5) m.xi = [](double s) { return volterra_xi_linear(s); };
    return m;
}

MomentCurves MomentCurves::empirical(std::vector<double> knots, std::vector<double> eta,
                                     std::vector<double> xi, std::vector<double> eta_se,
                                     std::vector<double> xi_se) {
    const std::size_t n = knots.size();
    if (n < 2 || eta.size() != n || xi.size() != n || eta_se.size() != n || xi_se.size() != n) {
        throw DomainError("MomentCurves::empirical: need >= 2 knots and one value per knot");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(knots[i] > knots[i - 1])) throw DomainError("MomentCurves::empirical: knots must increase");
    }
    MomentCurves m;
    m.provenance = Provenance::empirical;
    m.eta = [knots, eta](double s) { return clamp_interp(knots, eta, s); };
    m.xi = [knots, xi](double s) { return clamp_interp(knots, xi, s); };
    m.eta_se = [knots, eta_se](double s) { return clamp_interp(knots, eta_se, s); };
    m.xi_se = [knots, xi_se](double s) { return clamp_interp(knots, xi_se, s); };
    return m;
}

bool satisfies_cauchy_schwarz(const MomentCurves& curves, double t, std::size_t points) {
    if (!curves.has_xi()) return true;
    for (std::size_t i = 0; i < points; ++i) {
        const double s = points > 1 ? t * static_cast<double>(i) / static_cast<double>(points - 1) : 0.0;
        const double e = curves.eta(s);
        if (curves.xi(s) < e * e * (1.0 - 1e-12)) return false;
    }
    return true;
}

double asymptotic_variance(double t, double hurst, const MomentCurves& curves) {
    return cross_covariance(t, t, hurst, curves);
}

double cross_covariance(double ti, double tj, double hurst, const MomentCurves& curves) {
    require_hurst(hurst);
    if (ti < 0.0 || tj < 0.0) throw DomainError("cross_covariance: times must be nonnegative");
    const double upper = std::min(ti, tj);
    if (upper == 0.0) return 0.0;
    if (hurst == 0.5) {
        const auto& xi = need_xi(curves);
        return 2.0 * quad::integrate([&](double s) { return (ti - s) * (tj - s) * xi(s); }, 0.0, upper);
    }
    const double eta_factor = std::pow(2.0, 2.0 * hurst);
    return eta_factor * quad::integrate(
                            [&](double s) {
                                const double e = curves.eta(s);
                                return (ti - s) * (tj - s) * e * e;
                            },
                            0.0, upper);
}

double prelimit_variance_white(double t, double r, const MomentCurves& curves) {
    if (!(t > 0.0)) throw DomainError("prelimit_variance_white: t must be positive");
    if (r < 2.0 * t) throw DomainError("prelimit_variance_white: needs R >= 2t");
    const auto& xi = need_xi(curves);
    return quad::integrate(
        [&](double s) {
            const double a = t - s;
            return xi(s) * 2.0 * r * a * a * (1.0 - a / (3.0 * r));
        },
        0.0, t);
}

double prelimit_lower_bound_white(double t, double r, const MomentCurves& curves) {
    if (r < 2.0 * t) throw DomainError("prelimit_lower_bound_white: needs R >= 2t");
    const auto& xi = need_xi(curves);
    return (5.0 / 3.0) * r * quad::integrate([&](double s) { return (t - s) * (t - s) * xi(s); }, 0.0, t);
}

double volterra_xi_linear(double t) {
    if (t < 0.0) throw DomainError("volterra_xi_linear: t must be nonnegative");
    return std::cosh(t / std::numbers::sqrt2);
}

double volterra_xi_linear_stepped(double t, double step) {
    if (t < 0.0 || !(step > 0.0)) throw DomainError("volterra_xi_linear_stepped: bad arguments");
    const auto n = static_cast<std::size_t>(std::ceil(t / step - 1e-12));
    if (n == 0) return 1.0;
    const double h = t / static_cast<double>(n);
    // m_n = 1 + ½ h [½ t_n m_0 + Σ_{k=1}^{n−1} (t_n − t_k) m_k]; the k = n
    // trapezoid term has zero kernel, so the scheme is explicit.
    std::vector<double> m(n + 1);
    m[0] = 1.0;
    double sum_m = 0.0;   // Σ_{k=1}^{n−1} m_k
    double sum_tm = 0.0;  // Σ_{k=1}^{n−1} t_k m_k
    for (std::size_t i = 1; i <= n; ++i) {
        const double ti = h * static_cast<double>(i);
        m[i] = 1.0 + 0.5 * h * (0.5 * ti * m[0] + ti * sum_m - sum_tm);
        sum_m += m[i];
        sum_tm += ti * m[i];
    }
    return m[n];
}

double first_chaos_covariance(double ti, double tj, double r, double hurst) {
    require_hurst(hurst);
    if (ti < 0.0 || tj < 0.0) throw DomainError("first_chaos_covariance: times must be nonnegative");
    if (!(r > 0.0)) throw DomainError("first_chaos_covariance: R must be positive");
    const double upper = std::min(ti, tj);
    if (upper == 0.0) return 0.0;
    const auto f = [&](double s) { return phi_inner(ti - s, tj - s, r, hurst); };
    // Kinks where a + b or |a − b| meets 2R.
    std::vector<double> breaks;
    for (double c : {0.5 * (ti + tj) - r, 0.5 * (ti + tj)}) {
        if (c > 0.0 && c < upper) breaks.push_back(c);
    }
    return quad::integrate_pieces(f, 0.0, upper, breaks);
}

double first_chaos_variance(double t, double r, double hurst) {
    require_hurst(hurst);
    if (t < 0.0) throw DomainError("first_chaos_variance: t must be nonnegative");
    if (hurst == 0.5) {
        if (r < 2.0 * t) throw DomainError("first_chaos_variance: the H = 1/2 closed form needs R >= 2t");
        return (2.0 / 3.0) * r * t * t * t - t * t * t * t / 6.0;
    }
    return first_chaos_covariance(t, t, r, hurst);
}

double increment_variance_white(double s, double t, double r) {
    if (!(s >= 0.0 && s <= t)) throw DomainError("increment_variance_white: needs 0 <= s <= t");
    if (!(r > 0.0)) throw DomainError("increment_variance_white: R must be positive");
    const auto inner = [&](double q) {
        const double a = t - q;
        const double b = q < s ? s - q : 0.0;
        const auto diff2 = [&](double y) {
            const double d = phi_r(q, y, t, r) - (b > 0.0 ? phi_r(q, y, s, r) : 0.0);
            return d * d;
        };
        const double reach = r + a;
        return quad::integrate_pieces(diff2, -reach, reach, {-r - b, -r + b, r - b, r + b, -r + a, r - a});
    };
    std::vector<double> breaks{s};
    if (t - 2.0 * r > 0.0) breaks.push_back(t - 2.0 * r);
    return quad::integrate_pieces(inner, 0.0, t, breaks);
}

AsymptoticConstants asymptotic_constants(std::span<const double> times, double hurst,
                                         const MomentCurves& curves) {
    AsymptoticConstants out;
    out.alpha_h = alpha_h(hurst);
    out.times.assign(times.begin(), times.end());
    const std::size_t n = times.size();
    out.covariance.resize(n * n);
    out.variance.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double c = cross_covariance(times[i], times[j], hurst, curves);
            out.covariance[i * n + j] = c;
            out.covariance[j * n + i] = c;
        }
        out.variance[i] = out.covariance[i * n + i];
    }
    if (n > 0) {
        Eigen::MatrixXd m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) m(i, j) = out.covariance[i * n + j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
        out.min_eigenvalue = solver.eigenvalues().minCoeff();
    }
    return out;
}

}  // namespace fracwave

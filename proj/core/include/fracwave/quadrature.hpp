#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fracwave::quad {

/// Adaptive 31-point Gauss–Kronrod over [a, b]. `rel_tol` is passed to the
/// bisection driver; the integrands used here are piecewise smooth, so
/// callers split at known kinks with `integrate_pieces`.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13, unsigned max_depth = 18) {
    if (!(b > a)) return 0.0;
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol,
                                                                          &error);
}

/// Sum of `integrate` over [a, b] split at every breakpoint strictly inside it.
template <class F>
double integrate_pieces(F&& f, double a, double b, std::vector<double> breaks, double rel_tol = 1e-13) {
    if (!(b > a)) return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double sum = 0.0;
    double left = a;
    for (double x : breaks) {
        if (x <= left) continue;
        if (x > b) break;
        sum += integrate(f, left, x, rel_tol);
        left = x;
    }
    return sum;
}

}  // namespace fracwave::quad

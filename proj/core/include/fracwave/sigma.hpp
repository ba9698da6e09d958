#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fracwave {

/// Lipschitz coefficient σ of the multiplicative noise.
class SigmaSpec {
public:
    enum class Kind { constant, affine, affine_sine, tabulated };

    /// σ(u) = c
    static SigmaSpec constant(double c);
    /// σ(u) = u
    static SigmaSpec linear();
    /// σ(u) = a + b·u  (σ(u) = u − 1 is affine(−1, 1))
    static SigmaSpec affine(double a, double b);
    /// σ(u) = a + b·sin(u)
    static SigmaSpec affine_sine(double a, double b);
    /// Piecewise-linear through (knots[i], values[i]), clamped outside the
    /// knot range. Knots must be strictly increasing, at least two.
    static SigmaSpec tabulated(std::vector<double> knots, std::vector<double> values);

    double operator()(double u) const noexcept {
        switch (kind_) {
            case Kind::constant: return a_;
            case Kind::affine: return a_ + b_ * u;
            case Kind::affine_sine: return a_ + b_ * std::sin(u);
            case Kind::tabulated: return interpolate(u);
        }
        return 0.0;
    }

    Kind kind() const noexcept { return kind_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    std::span<const double> knots() const noexcept { return knots_; }
    std::span<const double> values() const noexcept { return values_; }

    double lipschitz() const noexcept { return lipschitz_; }
    double sigma_at_one() const noexcept { return sigma_at_one_; }
    /// σ(1) = 0: the solution started from 1 never moves.
    bool degenerate() const noexcept { return sigma_at_one_ == 0.0; }
    bool is_constant() const noexcept { return kind_ == Kind::constant; }
    /// σ(u) = u exactly.
    bool is_linear() const noexcept { return kind_ == Kind::affine && a_ == 0.0 && b_ == 1.0; }

    /// Check |σ(u) − σ(v)| <= L|u − v| on `pairs` random pairs in [lo, hi].
    bool spot_check_lipschitz(std::size_t pairs, std::uint64_t seed, double lo = -10.0,
                              double hi = 10.0) const;

    /// Compact description, e.g. "affine_sine(1,0.5)".
    std::string describe() const;

    bool operator==(const SigmaSpec&) const = default;

private:
    SigmaSpec(Kind kind, double a, double b);
    double interpolate(double u) const noexcept;
    void finish();

    Kind kind_ = Kind::constant;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> values_;
    double lipschitz_ = 0.0;
    double sigma_at_one_ = 0.0;
};

}  // namespace fracwave

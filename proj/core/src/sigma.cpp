#include "fracwave/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <locale>
#include <sstream>

#include "fracwave/error.hpp"

namespace fracwave {

SigmaSpec::SigmaSpec(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

SigmaSpec SigmaSpec::constant(double c) {
    SigmaSpec s(Kind::constant, c, 0.0);
    s.finish();
    return s;
}

SigmaSpec SigmaSpec::linear() { return affine(0.0, 1.0); }

SigmaSpec SigmaSpec::affine(double a, double b) {
    SigmaSpec s(Kind::affine, a, b);
    s.finish();
    return s;
}

SigmaSpec SigmaSpec::affine_sine(double a, double b) {
    SigmaSpec s(Kind::affine_sine, a, b);
    s.finish();
    return s;
}

SigmaSpec SigmaSpec::tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size()) {
        throw DomainError("sigma: tabulated sigma needs >= 2 knots and one value per knot");
    }
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i] > knots[i - 1])) throw DomainError("sigma: knots must be strictly increasing");
    }
    SigmaSpec s(Kind::tabulated, 0.0, 0.0);
    s.knots_ = std::move(knots);
    s.values_ = std::move(values);
    s.finish();
    return s;
}

void SigmaSpec::finish() {
    for (double v : {a_, b_}) {
        if (!std::isfinite(v)) throw DomainError("sigma: parameters must be finite");
    }
    switch (kind_) {
        case Kind::constant: lipschitz_ = 0.0; break;
        case Kind::affine:
        case Kind::affine_sine: lipschitz_ = std::abs(b_); break;
        case Kind::tabulated:
            lipschitz_ = 0.0;
            for (std::size_t i = 1; i < knots_.size(); ++i) {
                const double slope = (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
                lipschitz_ = std::max(lipschitz_, std::abs(slope));
            }
            break;
    }
    sigma_at_one_ = (*this)(1.0);
}

double SigmaSpec::interpolate(double u) const noexcept {
    if (u <= knots_.front()) return values_.front();
    if (u >= knots_.back()) return values_.back();
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    const double w = (u - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
    return values_[i - 1] + w * (values_[i] - values_[i - 1]);
}

bool SigmaSpec::spot_check_lipschitz(std::size_t pairs, std::uint64_t seed, double lo, double hi) const {
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> uniform(lo, hi);
    for (std::size_t i = 0; i < pairs; ++i) {
        const double u = uniform(engine);
        const double v = uniform(engine);
        const double bound = lipschitz_ * std::abs(u - v);
        if (std::abs((*this)(u) - (*this)(v)) > bound * (1.0 + 1e-12) + 1e-15) return false;
    }
    return true;
}

std::string SigmaSpec::describe() const {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out.precision(17);
    switch (kind_) {
        case Kind::constant: out << "constant(" << a_ << ")"; break;
        case Kind::affine:
            if (is_linear()) out << "linear";
            else out << "affine(" << a_ << "," << b_ << ")";
            break;
        case Kind::affine_sine: out << "affine_sine(" << a_ << "," << b_ << ")"; break;
        case Kind::tabulated: out << "tabulated(" << knots_.size() << " knots)"; break;
    }
    return out.str();
}

}  // namespace fracwave

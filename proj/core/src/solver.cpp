#include "fracwave/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fracwave/error.hpp"

namespace fracwave {

namespace {

std::size_t lattice_count(double length, double h, const char* what) {
    const double ratio = length / h;
    const double rounded = std::round(ratio);
    if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
        throw DomainError(std::string("lattice: ") + what + " must be a positive multiple of h");
    }
    return static_cast<std::size_t>(rounded);
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

// Mass of the level strip over cells c0 and c0+1. Shared by the recursion and
// source_mass so both produce identical bits.
inline double strip_pair(const double* first, const double* second, std::size_t c0) noexcept {
    const double lower = first[c0] + first[c0 + 1];
    return second == nullptr ? lower : lower + (second[c0] + second[c0 + 1]);
}

struct LevelRows {
    const double* first;
    const double* second;
};

LevelRows level_rows(const NoiseSheet& sheet, std::size_t level) {
    if (level == 0) return {sheet.row(0).data(), nullptr};
    return {sheet.row(2 * level - 1).data(), sheet.row(2 * level).data()};
}

void check_sheet(const LatticeConfig& config, const NoiseSheet& sheet) {
    const auto& spec = sheet.spec();
    const std::size_t n = config.levels();
    if (!close(spec.dt, 0.5 * config.h) || !close(spec.dx, config.h)) {
        throw DomainError("solve: sheet cells must be (h/2) x h for lattice step h");
    }
    if (spec.n_time < 2 * n - 1 || spec.n_space != 2 * config.half_nodes()) {
        throw WindowError("solve: sheet does not cover the lattice window");
    }
}

}  // namespace

void LatticeConfig::validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("lattice: h must be positive");
    const std::size_t n = lattice_count(t_max, h, "t_max");
    const std::size_t j = lattice_count(x_half_width, h, "x_half_width");
    if (j < n) {
        throw WindowError("lattice: x_half_width " + std::to_string(x_half_width) + " < t_max " +
                          std::to_string(t_max) + " leaves no node whose domain of dependence fits the window");
    }
}

std::size_t LatticeConfig::levels() const { return lattice_count(t_max, h, "t_max"); }

std::size_t LatticeConfig::half_nodes() const { return lattice_count(x_half_width, h, "x_half_width"); }

NoiseSpec LatticeConfig::noise_shape(double hurst, std::uint64_t seed) const {
    validate();
    NoiseSpec spec;
    spec.hurst = hurst;
    spec.dt = 0.5 * h;
    spec.dx = h;
    spec.n_time = 2 * levels() - 1;
    spec.n_space = 2 * half_nodes();
    spec.seed = seed;
    spec.validate();
    return spec;
}

SolutionField::SolutionField(LatticeConfig config, SigmaSpec sigma, std::uint64_t noise_seed, double kappa)
    : config_(config), sigma_(std::move(sigma)), noise_seed_(noise_seed), kappa_(kappa) {
    config_.validate();
    levels_ = config_.levels();
    half_nodes_ = config_.half_nodes();
    values_.assign((levels_ + 1) * stride(), std::numeric_limits<double>::quiet_NaN());
}

bool SolutionField::valid(std::size_t level, long j) const noexcept {
    if (level > levels_) return false;
    const long reach = static_cast<long>(half_nodes_ - level);
    return j >= -reach && j <= reach;
}

double SolutionField::at(std::size_t level, long j) const {
    if (!valid(level, j)) {
        throw WindowError("solution: node (" + std::to_string(level) + ", " + std::to_string(j) +
                          ") lies outside the domain of dependence of the window");
    }
    return values_[level * stride() + static_cast<std::size_t>(j + static_cast<long>(half_nodes_))];
}

double calibrate_kernel(double h, double hurst) {
    if (!(h > 0.0)) throw DomainError("calibrate_kernel: h must be positive");
    if (!(hurst >= 0.5 && hurst < 1.0)) throw DomainError("calibrate_kernel: hurst must lie in [1/2, 1)");
    // The strips tile the white-noise cone exactly: N h² + N(N−1) h² = t².
    if (hurst == 0.5) return 0.5;

    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / h)));
    const double t = static_cast<double>(n) * h;
    const double two_h = 2.0 * hurst;
    // Level m strips: m contiguous sources of width 2h each, Var = height·(2mh)^{2H}.
    double lattice = 0.5 * h * std::pow(2.0 * t, two_h);
    for (std::size_t level = 1; level < n; ++level) {
        lattice += h * std::pow(2.0 * static_cast<double>(n - level) * h, two_h);
    }
    const double exact = t * std::pow(2.0 * t, two_h) / (two_h + 1.0);
    return 0.5 * std::sqrt(exact / lattice);
}

double source_mass(const NoiseSheet& sheet, const LatticeConfig& config, std::size_t level, long j) {
    const long half = static_cast<long>(config.half_nodes());
    if (level >= config.levels() || j <= -half || j >= half ||
        (level > 0 && 2 * level >= sheet.rows())) {
        throw WindowError("source_mass: node outside the sheet");
    }
    const auto rows = level_rows(sheet, level);
    return strip_pair(rows.first, rows.second, static_cast<std::size_t>(j + half - 1));
}

SolutionField solve(const LatticeConfig& config, const NoiseSheet& sheet, const SigmaSpec& sigma) {
    config.validate();
    check_sheet(config, sheet);
    const double kappa = calibrate_kernel(config.h, sheet.spec().hurst);
    SolutionField field(config, sigma, sheet.spec().seed, kappa);

    const std::size_t n_levels = field.levels();
    const std::size_t half = field.half_nodes();
    {
        auto row0 = field.mutable_row(0);
        for (auto& v : row0) v = 1.0;
    }
    for (std::size_t n = 0; n < n_levels; ++n) {
        const double* cur = field.row(n).data();
        const double* prev = n > 0 ? field.row(n - 1).data() : nullptr;
        double* next = field.mutable_row(n + 1).data();
        const auto rows = level_rows(sheet, n);
        // Nodes |j| <= half - n - 1, i.e. indices i = j + half.
        const std::size_t lo = n + 1;
        const std::size_t hi = 2 * half - n - 1;
        for (std::size_t i = lo; i <= hi; ++i) {
            const double increment = kappa * sigma(cur[i]) * strip_pair(rows.first, rows.second, i - 1);
            if (prev == nullptr) {
                next[i] = 0.5 * (cur[i + 1] + cur[i - 1]) + increment;
            } else {
                next[i] = cur[i + 1] + cur[i - 1] - prev[i] + increment;
            }
        }
    }
    return field;
}

SolutionField picard_reference(const LatticeConfig& config, const NoiseSheet& sheet,
                               const SigmaSpec& sigma, std::size_t iterations) {
    config.validate();
    check_sheet(config, sheet);
    const std::size_t n_levels = config.levels();
    const std::size_t half = config.half_nodes();
    if (n_levels + 1 > 65 || 2 * half + 1 > 257) {
        throw DomainError("picard_reference: lattice larger than 65 x 257 nodes");
    }

    const auto fill_valid = [&](SolutionField& f, double value) {
        for (std::size_t n = 0; n <= n_levels; ++n) {
            auto row = f.mutable_row(n);
            for (std::size_t i = n; i + n <= 2 * half; ++i) row[i] = value;
        }
    };

    SolutionField current(config, sigma, sheet.spec().seed, 0.5);
    fill_valid(current, 1.0);
    const auto rows_used = 2 * n_levels - 1;

    for (std::size_t k = 0; k < iterations; ++k) {
        SolutionField next(config, sigma, sheet.spec().seed, 0.5);
        for (auto& v : next.mutable_row(0)) v = 1.0;
        for (std::size_t target = 1; target <= n_levels; ++target) {
            auto out = next.mutable_row(target);
            for (std::size_t i = target; i + target <= 2 * half; ++i) {
                double sum = 0.0;
                for (std::size_t r = 0; r < rows_used; ++r) {
                    const std::size_t level = level_of_row(r);
                    if (level >= target) break;
                    const std::size_t reach = target - level;  // cone half-width in cells
                    const auto masses = sheet.row(r);
                    const auto src = current.row(level);
                    // The target's sublattice at this level has parity of i + target - 1 - level.
                    const std::size_t parity = (i + target - 1 - level) & 1U;
                    for (std::size_t c = i - reach; c < i + reach; ++c) {
                        // Cell c spans node indices c and c + 1.
                        const std::size_t node = (c & 1U) == parity ? c : c + 1;
                        sum += 0.5 * sigma(src[node]) * masses[c];
                    }
                }
                out[i] = 1.0 + sum;
            }
        }
        current = std::move(next);
    }
    return current;
}

}  // namespace fracwave

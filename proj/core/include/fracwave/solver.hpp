#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fracwave/noise.hpp"
#include "fracwave/sigma.hpp"

namespace fracwave {

/// Characteristic lattice with dt = dx = h. Nodes sit at (n·h, j·h) for
/// n = 0..levels(), j = −half_nodes()..half_nodes().
///
/// The driving sheet has half-height rows (dt = h/2, dx = h): row 0 covers
/// [0, h/2) and rows 2n−1, 2n cover the strip [t_n − h/2, t_n + h/2) that
/// feeds level n. Each strip is centred on its level, which makes the
/// lattice cone of a node cover exactly the area of the continuum cone.
struct LatticeConfig {
    double h = 1.0 / 64.0;
    double t_max = 1.0;
    double x_half_width = 2.0;

    /// h > 0, t_max and x_half_width are positive multiples of h, and
    /// x_half_width >= t_max. Throws DomainError otherwise.
    void validate() const;

    std::size_t levels() const;      ///< N = t_max / h
    std::size_t half_nodes() const;  ///< J = x_half_width / h
    std::size_t node_count() const { return 2 * half_nodes() + 1; }

    /// Largest |j| at level n whose backward cone stays on the lattice.
    std::size_t valid_half_width(std::size_t level) const { return half_nodes() - level; }

    /// Shape of the sheet that drives this lattice.
    NoiseSpec noise_shape(double hurst, std::uint64_t seed) const;

    bool operator==(const LatticeConfig&) const = default;
};

/// Lattice level fed by sheet row r.
constexpr std::size_t level_of_row(std::size_t r) noexcept { return (r + 1) / 2; }

/// u on the lattice. Nodes outside the shrinking valid cone hold NaN and are
/// never handed out; `at` throws WindowError for them.
class SolutionField {
public:
    SolutionField(LatticeConfig config, SigmaSpec sigma, std::uint64_t noise_seed, double kappa);

    const LatticeConfig& config() const noexcept { return config_; }
    const SigmaSpec& sigma() const noexcept { return sigma_; }
    std::uint64_t noise_seed() const noexcept { return noise_seed_; }
    double kappa() const noexcept { return kappa_; }

    std::size_t levels() const noexcept { return levels_; }
    std::size_t half_nodes() const noexcept { return half_nodes_; }
    bool valid(std::size_t level, long j) const noexcept;

    double at(std::size_t level, long j) const;
    /// Row of `level`, indexed by j + half_nodes(); entries outside the
    /// valid cone are NaN.
    std::span<const double> row(std::size_t level) const noexcept {
        return {values_.data() + level * stride(), stride()};
    }
    std::span<double> mutable_row(std::size_t level) noexcept {
        return {values_.data() + level * stride(), stride()};
    }

private:
    std::size_t stride() const noexcept { return 2 * half_nodes_ + 1; }

    LatticeConfig config_;
    SigmaSpec sigma_;
    std::uint64_t noise_seed_;
    double kappa_;
    std::size_t levels_;
    std::size_t half_nodes_;
    std::vector<double> values_;
};

/// Kernel weight κ of the lattice recursion: with σ ≡ 1 the variance of u at
/// t = 1 (nearest lattice time) equals the exact ¼·E[(cone mass)²]. Computed
/// by counting the lattice Green's function over the level strips; exactly ½
/// for H = 1/2.
double calibrate_kernel(double h, double hurst);

/// Explicit characteristic-lattice recursion
///   u^{n+1}_j = u^n_{j+1} + u^n_{j−1} − u^{n−1}_j + κ σ(u^n_j) ΔW^n_j,
///   u^1_j     = ½(u^0_{j+1} + u^0_{j−1}) + κ σ(u^0_j) ΔW^0_j,   u^0 ≡ 1,
/// where ΔW^n_j is the mass of the strip of level n over [x_j − h, x_j + h).
SolutionField solve(const LatticeConfig& config, const NoiseSheet& sheet, const SigmaSpec& sigma);

/// Mass ΔW^n_j attached to node j at level n.
double source_mass(const NoiseSheet& sheet, const LatticeConfig& config, std::size_t level, long j);

/// Picard iterate u_k of the mild equation by direct quadrature over the
/// sheet cells: u_0 ≡ 1 and
///   u_{k+1}(t,x) = 1 + Σ_cells ½·1{|x − y_c| <= t − s_c}·σ(u_k(s_c, ·))·W(cell),
/// with s_c the lattice time of the cell's strip and σ read at the adapted
/// node of the target's sublattice. Restricted to lattices of at most
/// 65 × 257 nodes.
SolutionField picard_reference(const LatticeConfig& config, const NoiseSheet& sheet,
                               const SigmaSpec& sigma, std::size_t iterations);

}  // namespace fracwave

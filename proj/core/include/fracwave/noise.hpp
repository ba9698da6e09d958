#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace fracwave {

/// Lattice of driving-noise cells: white in time, fractional Brownian in space.
struct NoiseSpec {
    double hurst = 0.5;
    double dt = 1.0;  ///< time-cell height
    double dx = 1.0;  ///< space-cell width
    std::size_t n_time = 1;
    std::size_t n_space = 1;
    std::uint64_t seed = 0;

    /// Throws DomainError unless 1/2 <= hurst < 1, dt, dx > 0 and both counts >= 1.
    void validate() const;

    bool operator==(const NoiseSpec&) const = default;
};

/// Half-open rectangle of cell indices: rows [row_begin, row_end) by
/// cells [cell_begin, cell_end).
struct CellRect {
    std::size_t row_begin = 0;
    std::size_t row_end = 0;
    std::size_t cell_begin = 0;
    std::size_t cell_end = 0;

    bool empty() const noexcept { return row_begin >= row_end || cell_begin >= cell_end; }
};

/// Noise masses W(cell) for every cell, row-major (row = time cell).
/// Immutable once built; safe to share read-only across threads.
class NoiseSheet {
public:
    NoiseSheet(NoiseSpec spec, std::vector<double> masses);

    const NoiseSpec& spec() const noexcept { return spec_; }
    std::size_t rows() const noexcept { return spec_.n_time; }
    std::size_t cols() const noexcept { return spec_.n_space; }

    double mass(std::size_t row, std::size_t cell) const noexcept { return masses_[row * cols() + cell]; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {masses_.data() + r * cols(), cols()};
    }
    std::span<const double> masses() const noexcept { return masses_; }

    /// Copy with every cell in `rect` set to zero (used by locality tests and
    /// the zero-noise limit).
    NoiseSheet with_zeroed(const CellRect& rect) const;
    /// Copy with `mass(row, cell)` replaced.
    NoiseSheet with_mass(std::size_t row, std::size_t cell, double value) const;

    bool operator==(const NoiseSheet& other) const = default;

private:
    NoiseSpec spec_;
    std::vector<double> masses_;
};

/// Covariance of two space cells of width dx at integer lag d, per unit of
/// time: ½·dx^{2H}(|d+1|^{2H} − 2|d|^{2H} + |d−1|^{2H}). Exactly dx·δ_{d0}
/// for H = 1/2.
double fgn_cell_covariance(std::size_t lag, double hurst, double dx);

/// Exact-in-distribution sampler for sheets of a fixed shape. The circulant
/// embedding (for H > 1/2) is computed once at construction; `sample` is
/// const and may be called concurrently.
class NoiseSampler {
public:
    explicit NoiseSampler(const NoiseSpec& shape);
    ~NoiseSampler();
    NoiseSampler(NoiseSampler&&) noexcept;
    NoiseSampler& operator=(NoiseSampler&&) noexcept;

    /// Sheet with the sampler's shape and the given seed. Row r draws its
    /// normals from substream derive_seed(seed, r).
    NoiseSheet sample(std::uint64_t seed) const;

    const NoiseSpec& shape() const noexcept { return shape_; }
    /// FFT length of the embedding; 0 for white noise.
    std::size_t embedding_size() const noexcept;
    /// Fraction of total spectral mass removed by clipping negative eigenvalues.
    double clipped_fraction() const noexcept;

private:
    struct Embedding;
    NoiseSpec shape_;
    std::unique_ptr<Embedding> embedding_;
};

/// Draw a sheet for `spec` (seed included).
NoiseSheet sample_sheet(const NoiseSpec& spec);

/// Sum of cell masses over `rect`; 0 for an empty rectangle. Throws
/// WindowError if the rectangle leaves the lattice.
double region_mass(const NoiseSheet& sheet, const CellRect& rect);

// Binary sheet dump: 40-byte little-endian header
//   "FWNS" | version u32 | H f64 | dt f64 | dx f64 | n_time u32 | n_space u32
// followed by n_time*n_space f64 masses, row-major.
inline constexpr std::uint32_t kSheetFormatVersion = 1;
inline constexpr std::size_t kSheetHeaderBytes = 40;

void write_sheet(std::ostream& out, const NoiseSheet& sheet);
void write_sheet(const std::filesystem::path& path, const NoiseSheet& sheet);
/// The dump carries no seed; the returned spec has seed 0.
NoiseSheet read_sheet(std::istream& in);
NoiseSheet read_sheet(const std::filesystem::path& path);

}  // namespace fracwave

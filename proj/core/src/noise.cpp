#include "fracwave/noise.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

#include <fftw3.h>

#include "fracwave/error.hpp"
#include "fracwave/rng.hpp"

namespace fracwave {

namespace {

// FFTW planning is not thread-safe; execution with fftw_execute_dft is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

ComplexBuffer make_buffer(std::size_t n) {
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (p == nullptr) throw std::bad_alloc();
    return ComplexBuffer(p);
}

std::size_t next_pow2(std::size_t n) {
    return std::bit_ceil(std::max<std::size_t>(n, 1));
}

}  // namespace

void NoiseSpec::validate() const {
    if (!(hurst >= 0.5 && hurst < 1.0)) {
        throw DomainError("noise: hurst must lie in [1/2, 1), got " + std::to_string(hurst));
    }
    if (!(dt > 0.0) || !(dx > 0.0)) throw DomainError("noise: dt and dx must be positive");
    if (n_time < 1 || n_space < 1) throw DomainError("noise: n_time and n_space must be >= 1");
}

NoiseSheet::NoiseSheet(NoiseSpec spec, std::vector<double> masses)
    : spec_(spec), masses_(std::move(masses)) {
    spec_.validate();
    if (masses_.size() != spec_.n_time * spec_.n_space) {
        throw DomainError("noise: mass array does not match n_time x n_space");
    }
}

NoiseSheet NoiseSheet::with_zeroed(const CellRect& rect) const {
    if (rect.row_end > rows() || rect.cell_end > cols()) {
        throw WindowError("noise: rectangle outside the sheet");
    }
    auto copy = masses_;
    for (std::size_t r = rect.row_begin; r < rect.row_end; ++r) {
        for (std::size_t c = rect.cell_begin; c < rect.cell_end; ++c) copy[r * cols() + c] = 0.0;
    }
    return NoiseSheet(spec_, std::move(copy));
}

NoiseSheet NoiseSheet::with_mass(std::size_t row, std::size_t cell, double value) const {
    if (row >= rows() || cell >= cols()) throw WindowError("noise: cell outside the sheet");
    auto copy = masses_;
    copy[row * cols() + cell] = value;
    return NoiseSheet(spec_, std::move(copy));
}

double fgn_cell_covariance(std::size_t lag, double hurst, double dx) {
    if (!(hurst >= 0.5 && hurst < 1.0)) throw DomainError("fgn_cell_covariance: hurst must lie in [1/2, 1)");
    if (!(dx > 0.0)) throw DomainError("fgn_cell_covariance: dx must be positive");
    if (hurst == 0.5) return lag == 0 ? dx : 0.0;
    const double two_h = 2.0 * hurst;
    const double d = static_cast<double>(lag);
    const double second_diff =
        std::pow(d + 1.0, two_h) - 2.0 * std::pow(d, two_h) + std::pow(std::abs(d - 1.0), two_h);
    return 0.5 * std::pow(dx, two_h) * second_diff;
}

// Davies–Harte: the covariance sequence c_0..c_{m/2} is wrapped into a
// symmetric circulant of size m; one complex FFT of sqrt(λ/m)·(Z1 + iZ2)
// yields two independent rows (real and imaginary parts).
struct NoiseSampler::Embedding {
    std::size_t size = 0;
    std::vector<double> scale;  // sqrt(max(λ_k, 0) / m)
    double clipped_fraction = 0.0;
    fftw_plan plan = nullptr;

    Embedding(const NoiseSpec& spec) {
        size = next_pow2(2 * spec.n_space);
        auto in = make_buffer(size);
        auto out = make_buffer(size);
        {
            std::lock_guard lock(fftw_planner_mutex());
            plan = fftw_plan_dft_1d(static_cast<int>(size), in.get(), out.get(), FFTW_FORWARD,
                                    FFTW_ESTIMATE);
        }
        if (plan == nullptr) throw EmbeddingError("noise: FFTW plan creation failed");

        const std::size_t half = size / 2;
        for (std::size_t k = 0; k < size; ++k) {
            const std::size_t lag = k <= half ? k : size - k;
            in[k][0] = spec.dt * fgn_cell_covariance(lag, spec.hurst, spec.dx);
            in[k][1] = 0.0;
        }
        fftw_execute_dft(plan, in.get(), out.get());

        double lambda_max = 0.0;
        double total = 0.0;
        for (std::size_t k = 0; k < size; ++k) {
            lambda_max = std::max(lambda_max, out[k][0]);
            total += std::abs(out[k][0]);
        }
        double clipped = 0.0;
        std::size_t warned = 0;
        scale.resize(size);
        for (std::size_t k = 0; k < size; ++k) {
            double lambda = out[k][0];
            if (lambda < 0.0) {
                if (lambda < -1e-10 * lambda_max) ++warned;
                clipped += -lambda;
                lambda = 0.0;
            }
            scale[k] = std::sqrt(lambda / static_cast<double>(size));
        }
        clipped_fraction = total > 0.0 ? clipped / total : 0.0;
        if (clipped_fraction > 1e-6) {
            destroy();
            std::ostringstream msg;
            msg << "noise: circulant embedding of size " << size << " lost " << clipped_fraction
                << " of its spectral mass to negative eigenvalues; enlarge the embedding";
            throw EmbeddingError(msg.str());
        }
        if (warned > 0) {
            std::clog << "fracwave: warning: clipped " << warned
                      << " negative embedding eigenvalue(s), spectral mass fraction " << clipped_fraction
                      << '\n';
        }
    }

    ~Embedding() { destroy(); }
    Embedding(const Embedding&) = delete;
    Embedding& operator=(const Embedding&) = delete;

    void destroy() {
        if (plan != nullptr) {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan);
            plan = nullptr;
        }
    }
};

NoiseSampler::NoiseSampler(const NoiseSpec& shape) : shape_(shape) {
    shape_.validate();
    if (shape_.hurst > 0.5) embedding_ = std::make_unique<Embedding>(shape_);
}

NoiseSampler::~NoiseSampler() = default;
NoiseSampler::NoiseSampler(NoiseSampler&&) noexcept = default;
NoiseSampler& NoiseSampler::operator=(NoiseSampler&&) noexcept = default;

std::size_t NoiseSampler::embedding_size() const noexcept {
    return embedding_ ? embedding_->size : 0;
}

double NoiseSampler::clipped_fraction() const noexcept {
    return embedding_ ? embedding_->clipped_fraction : 0.0;
}

NoiseSheet NoiseSampler::sample(std::uint64_t seed) const {
    NoiseSpec spec = shape_;
    spec.seed = seed;
    const std::size_t n = spec.n_space;
    std::vector<double> masses(spec.n_time * n);

    if (!embedding_) {
        const double sd = std::sqrt(spec.dt * spec.dx);
        for (std::size_t r = 0; r < spec.n_time; ++r) {
            NormalStream normal(derive_seed(seed, r));
            double* row = masses.data() + r * n;
            for (std::size_t c = 0; c < n; ++c) row[c] = sd * normal();
        }
        return NoiseSheet(spec, std::move(masses));
    }

    const std::size_t m = embedding_->size;
    auto in = make_buffer(m);
    auto out = make_buffer(m);
    const auto& scale = embedding_->scale;
    for (std::size_t r = 0; r < spec.n_time; r += 2) {
        const bool has_pair = r + 1 < spec.n_time;
        NormalStream re(derive_seed(seed, r));
        if (has_pair) {
            NormalStream im(derive_seed(seed, r + 1));
            for (std::size_t k = 0; k < m; ++k) {
                in[k][0] = scale[k] * re();
                in[k][1] = scale[k] * im();
            }
        } else {
            // Lone last row: imaginary part drawn from the same stream and discarded.
            for (std::size_t k = 0; k < m; ++k) {
                in[k][0] = scale[k] * re();
                in[k][1] = scale[k] * re();
            }
        }
        fftw_execute_dft(embedding_->plan, in.get(), out.get());
        double* first = masses.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) first[c] = out[c][0];
        if (has_pair) {
            double* second = first + n;
            for (std::size_t c = 0; c < n; ++c) second[c] = out[c][1];
        }
    }
    return NoiseSheet(spec, std::move(masses));
}

NoiseSheet sample_sheet(const NoiseSpec& spec) { return NoiseSampler(spec).sample(spec.seed); }

double region_mass(const NoiseSheet& sheet, const CellRect& rect) {
    if (rect.empty()) return 0.0;
    if (rect.row_end > sheet.rows() || rect.cell_end > sheet.cols()) {
        throw WindowError("region_mass: rectangle outside the sheet");
    }
    double sum = 0.0;
    for (std::size_t r = rect.row_begin; r < rect.row_end; ++r) {
        const auto row = sheet.row(r);
        for (std::size_t c = rect.cell_begin; c < rect.cell_end; ++c) sum += row[c];
    }
    return sum;
}

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw std::runtime_error("noise: truncated sheet dump");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void write_sheet(std::ostream& out, const NoiseSheet& sheet) {
    const auto& spec = sheet.spec();
    if (spec.n_time > UINT32_MAX || spec.n_space > UINT32_MAX) {
        throw DomainError("noise: sheet too large for the dump format");
    }
    out.write("FWNS", 4);
    put_le<std::uint32_t>(out, kSheetFormatVersion);
    put_le<double>(out, spec.hurst);
    put_le<double>(out, spec.dt);
    put_le<double>(out, spec.dx);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.n_time));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.n_space));
    for (double v : sheet.masses()) put_le<double>(out, v);
    if (!out) throw std::runtime_error("noise: failed writing sheet dump");
}

void write_sheet(const std::filesystem::path& path, const NoiseSheet& sheet) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("noise: cannot open " + path.string() + " for writing");
    write_sheet(out, sheet);
}

NoiseSheet read_sheet(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FWNS", 4) != 0) throw std::runtime_error("noise: bad sheet magic");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kSheetFormatVersion) {
        throw std::runtime_error("noise: unsupported sheet version " + std::to_string(version));
    }
    NoiseSpec spec;
    spec.hurst = get_le<double>(in);
    spec.dt = get_le<double>(in);
    spec.dx = get_le<double>(in);
    spec.n_time = get_le<std::uint32_t>(in);
    spec.n_space = get_le<std::uint32_t>(in);
    spec.validate();
    std::vector<double> masses(spec.n_time * spec.n_space);
    for (auto& v : masses) v = get_le<double>(in);
    return NoiseSheet(spec, std::move(masses));
}

NoiseSheet read_sheet(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("noise: cannot open " + path.string());
    return read_sheet(in);
}

}  // namespace fracwave

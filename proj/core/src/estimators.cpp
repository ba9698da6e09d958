#include "fracwave/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <ostream>
#include <sstream>
#include <thread>

#include "fracwave/error.hpp"
#include "fracwave/rng.hpp"

namespace fracwave {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t lattice_index(double value, double h, const char* what, bool allow_zero) {
    const double ratio = value / h;
    const double rounded = std::round(ratio);
    const bool ok = std::isfinite(ratio) && (allow_zero ? rounded >= 0.0 : rounded >= 1.0) &&
                    std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, rounded);
    if (!ok) throw DomainError(std::string(what) + " must be a " + (allow_zero ? "non-negative" : "positive") +
                               " multiple of h");
    return static_cast<std::size_t>(rounded);
}

struct Window {
    std::size_t level;
    std::size_t reach;  // K = R / h
};

Window check_window(const LatticeConfig& config, double t, double r) {
    const std::size_t level = lattice_index(t, config.h, "t", true);
    const std::size_t reach = lattice_index(r, config.h, "R", false);
    if (level > config.levels()) {
        throw WindowError("t = " + std::to_string(t) + " exceeds the simulated horizon t_max = " +
                          std::to_string(config.t_max));
    }
    if (reach + level > config.half_nodes()) {
        throw WindowError("R + t = " + std::to_string(r + t) + " exceeds the window half-width " +
                          std::to_string(config.x_half_width) + ": the domain of dependence of [-R, R] is not simulated");
    }
    return {level, reach};
}

// Trapezoid weight of node j on [−K, K] in units of h.
double trapezoid(long j, long k) { return (j == -k || j == k) ? 0.5 : 1.0; }

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample mean and its standard error.
Estimate mean_estimate(std::span<const double> v) {
    Estimate e;
    const std::size_t n = v.size();
    e.value = mean_of(v);
    if (n < 2) {
        e.se = kNaN;
        return e;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - e.value) * (x - e.value);
    e.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    return e;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FRACWAVE_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

nlohmann::json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

nlohmann::json estimate_json(const Estimate& e) { return {{"value", number(e.value)}, {"se", number(e.se)}}; }

nlohmann::json optional_estimate(const std::optional<Estimate>& e) {
    return e ? estimate_json(*e) : nlohmann::json(nullptr);
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

double spatial_average(const SolutionField& field, double t, double r) {
    const auto [level, reach] = check_window(field.config(), t, r);
    if (level == 0) return 0.0;
    const auto row = field.row(level);
    const long half = static_cast<long>(field.half_nodes());
    const long k = static_cast<long>(reach);
    double sum = 0.0;
    for (long j = -k; j <= k; ++j) sum += trapezoid(j, k) * (row[static_cast<std::size_t>(j + half)] - 1.0);
    return field.config().h * sum;
}

ChaosWeights::ChaosWeights(const LatticeConfig& config, double kappa, double t, double r) : config_(config) {
    config_.validate();
    const auto [level, reach] = check_window(config_, t, r);
    target_level_ = level;
    const long k = static_cast<long>(reach);
    const long half = static_cast<long>(config_.half_nodes());

    // prefix[p][j + k + 1] = Σ trapezoid weights of targets j' <= j with j' ≡ p (mod 2).
    std::vector<double> prefix[2];
    for (auto& p : prefix) p.assign(static_cast<std::size_t>(2 * k + 2), 0.0);
    for (long j = -k; j <= k; ++j) {
        const auto slot = static_cast<std::size_t>(j + k + 1);
        for (int p = 0; p < 2; ++p) {
            const bool hit = ((j % 2 + 2) % 2) == p;
            prefix[p][slot] = prefix[p][slot - 1] + (hit ? trapezoid(j, k) : 0.0);
        }
    }
    const auto range_sum = [&](int parity, long lo, long hi) {
        lo = std::max(lo, -k);
        hi = std::min(hi, k);
        if (lo > hi) return 0.0;
        return prefix[parity][static_cast<std::size_t>(hi + k + 1)] - prefix[parity][static_cast<std::size_t>(lo + k)];
    };

    levels_.resize(level);
    for (std::size_t n = 0; n < level; ++n) {
        // A source at (n, s) reaches level N on |j − s| <= d with j − s ≡ d (mod 2).
        const long d = static_cast<long>(level - 1 - n);
        auto& out = levels_[n];
        out.first_node = static_cast<std::size_t>(half - k - d);
        out.weights.resize(static_cast<std::size_t>(2 * (k + d) + 1));
        for (long s = -k - d; s <= k + d; ++s) {
            const int parity = static_cast<int>(((s + d) % 2 + 2) % 2);
            out.weights[static_cast<std::size_t>(s + k + d)] = kappa * config_.h * range_sum(parity, s - d, s + d);
        }
    }
}

double ChaosWeights::project(const NoiseSheet& sheet) const {
    const auto& spec = sheet.spec();
    if (spec.n_space != 2 * config_.half_nodes() ||
        (target_level_ > 0 && spec.n_time < 2 * target_level_ - 1)) {
        throw WindowError("chaos projection: sheet does not cover the lattice window");
    }
    double total = 0.0;
    for (std::size_t n = 0; n < levels_.size(); ++n) {
        const double* first = sheet.row(n == 0 ? 0 : 2 * n - 1).data();
        const double* second = n == 0 ? nullptr : sheet.row(2 * n).data();
        const auto& lv = levels_[n];
        double acc = 0.0;
        for (std::size_t q = 0; q < lv.weights.size(); ++q) {
            const std::size_t c0 = lv.first_node + q - 1;
            double m = first[c0] + first[c0 + 1];
            if (second != nullptr) m += second[c0] + second[c0 + 1];
            acc += lv.weights[q] * m;
        }
        total += acc;
    }
    return total;
}

std::vector<double> ChaosWeights::cell_coefficients(std::size_t level) const {
    std::vector<double> out(2 * config_.half_nodes(), 0.0);
    if (level >= levels_.size()) return out;
    const auto& lv = levels_[level];
    for (std::size_t q = 0; q < lv.weights.size(); ++q) {
        const std::size_t node = lv.first_node + q;
        out[node - 1] += lv.weights[q];
        out[node] += lv.weights[q];
    }
    return out;
}

double chaos_projection(const SolutionField& field, const NoiseSheet& sheet, double t, double r) {
    return ChaosWeights(field.config(), field.kappa(), t, r).project(sheet);
}

double lattice_chaos_covariance(const ChaosWeights& a, const ChaosWeights& b, double hurst) {
    if (!(a.config() == b.config())) throw DomainError("lattice_chaos_covariance: weights on different lattices");
    if (!(hurst >= 0.5 && hurst < 1.0)) throw DomainError("lattice_chaos_covariance: hurst must lie in [1/2, 1)");
    const double h = a.config().h;
    const std::size_t cells = 2 * a.config().half_nodes();
    std::vector<double> rho(cells);
    for (std::size_t d = 0; d < cells; ++d) rho[d] = fgn_cell_covariance(d, hurst, h);

    const std::size_t shared = std::min(a.target_level(), b.target_level());
    double total = 0.0;
    for (std::size_t n = 0; n < shared; ++n) {
        const auto ca = a.cell_coefficients(n);
        const auto cb = b.cell_coefficients(n);
        const double height = n == 0 ? 0.5 * h : h;
        double acc = 0.0;
        if (hurst == 0.5) {
            for (std::size_t c = 0; c < cells; ++c) acc += ca[c] * cb[c];
            acc *= h;
        } else {
            std::vector<std::size_t> nz_b;
            for (std::size_t c = 0; c < cells; ++c) {
                if (cb[c] != 0.0) nz_b.push_back(c);
            }
            for (std::size_t c = 0; c < cells; ++c) {
                if (ca[c] == 0.0) continue;
                double row = 0.0;
                for (std::size_t c2 : nz_b) row += cb[c2] * rho[c > c2 ? c - c2 : c2 - c];
                acc += ca[c] * row;
            }
        }
        total += height * acc;
    }
    return total;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("ks_statistic: no samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = normal_cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_normality(std::span<const double> samples) {
    if (samples.size() < 100) {
        throw DomainError("ks_normality: too few samples (" + std::to_string(samples.size()) + " < 100)");
    }
    return ks_statistic(samples);
}

// ---------------------------------------------------------------------------

void ExperimentPlan::validate() const {
    if (!(hurst >= 0.5 && hurst < 1.0)) throw DomainError("plan: hurst must lie in [1/2, 1)");
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("plan: h must be positive");
    if (times.empty()) throw DomainError("plan: at least one observation time is required");
    if (radii.empty()) throw DomainError("plan: at least one radius is required");
    if (replicas < 1) throw DomainError("plan: replicas must be at least 1");
    for (std::size_t i = 0; i < times.size(); ++i) {
        lattice_index(times[i], h, "plan: time", true);
        if (i > 0 && !(times[i] > times[i - 1])) throw DomainError("plan: times must be strictly increasing");
    }
    for (double r : radii) lattice_index(r, h, "plan: radius", false);
    if (!(t_max() > 0.0)) throw DomainError("plan: the largest time must be positive");
    if (window != 0.0) {
        lattice_index(window, h, "plan: window", false);
        if (r_max() + t_max() > window * (1.0 + 1e-12)) {
            throw WindowError("plan: max(R) + max(t) = " + format_double(r_max() + t_max()) + " exceeds window " +
                              format_double(window) + ": the domain of dependence of [-R, R] leaves the simulated window");
        }
    }
    lattice().validate();
}

double ExperimentPlan::t_max() const { return times.empty() ? 0.0 : times.back(); }

double ExperimentPlan::r_max() const { return radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end()); }

LatticeConfig ExperimentPlan::lattice() const {
    LatticeConfig c;
    c.h = h;
    c.t_max = t_max();
    c.x_half_width = window != 0.0 ? window : r_max() + t_max();
    return c;
}

std::string ExperimentPlan::fingerprint() const {
    std::ostringstream os;
    os << "hurst=" << format_double(hurst) << ";sigma=" << static_cast<int>(sigma.kind()) << ':'
       << format_double(sigma.a()) << ':' << format_double(sigma.b());
    for (double k : sigma.knots()) os << ":k" << format_double(k);
    for (double v : sigma.values()) os << ":v" << format_double(v);
    os << ";h=" << format_double(h) << ";times=";
    for (double t : times) os << format_double(t) << ',';
    os << ";radii=";
    for (double r : radii) os << format_double(r) << ',';
    os << ";replicas=" << replicas << ";seed=" << seed
       << ";normalization=" << (normalization == Normalization::oracle ? "oracle" : "self") << ";chaos=" << chaos
       << ";window=" << format_double(window);
    return os.str();
}

std::string ExperimentPlan::hash() const {
    std::uint64_t v = 0xcbf29ce484222325ULL;
    for (unsigned char c : fingerprint()) {
        v ^= c;
        v *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// ---------------------------------------------------------------------------

ReplicaSet::ReplicaSet(std::vector<ReplicaRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records_.size(); ++i) {
        if (records_[i].id == records_[i - 1].id) {
            throw DomainError("replica set: duplicate replica id " + std::to_string(records_[i].id));
        }
    }
}

void ReplicaSet::merge(ReplicaSet other) {
    auto combined = std::move(records_);
    combined.reserve(combined.size() + other.records_.size());
    for (auto& r : other.records_) combined.push_back(std::move(r));
    *this = ReplicaSet(std::move(combined));
}

ReplicaSet ReplicaSet::merged(ReplicaSet a, ReplicaSet b) {
    a.merge(std::move(b));
    return a;
}

ReplicaSet simulate_replicas(const ExperimentPlan& plan, std::size_t first, std::size_t count) {
    plan.validate();
    const LatticeConfig config = plan.lattice();
    const double kappa = calibrate_kernel(plan.h, plan.hurst);
    const NoiseSampler sampler(config.noise_shape(plan.hurst, plan.seed));

    std::vector<ChaosWeights> weights;
    if (plan.chaos) {
        for (double t : plan.times) {
            for (double r : plan.radii) weights.emplace_back(config, kappa, t, r);
        }
    }
    const std::size_t n_levels = config.levels();
    const long inner = static_cast<long>(config.half_nodes() - n_levels);
    const long half = static_cast<long>(config.half_nodes());

    std::vector<ReplicaRecord> records(count);
    const auto run_one = [&](std::size_t slot) {
        ReplicaRecord rec;
        rec.id = first + slot;
        const NoiseSheet sheet = sampler.sample(derive_seed(plan.seed, rec.id));
        const SolutionField field = solve(config, sheet, plan.sigma);
        rec.g.reserve(plan.times.size() * plan.radii.size());
        for (double t : plan.times) {
            for (double r : plan.radii) rec.g.push_back(spatial_average(field, t, r));
        }
        for (const auto& w : weights) rec.chaos.push_back(w.project(sheet));
        rec.eta.resize(n_levels + 1);
        rec.xi.resize(n_levels + 1);
        for (std::size_t n = 0; n <= n_levels; ++n) {
            const auto row = field.row(n);
            double s1 = 0.0;
            double s2 = 0.0;
            for (long j = -inner; j <= inner; ++j) {
                const double v = plan.sigma(row[static_cast<std::size_t>(j + half)]);
                s1 += v;
                s2 += v * v;
            }
            const double m = static_cast<double>(2 * inner + 1);
            rec.eta[n] = s1 / m;
            rec.xi[n] = s2 / m;
        }
        records[slot] = std::move(rec);
    };

    const std::size_t workers = std::min(resolve_threads(plan.threads), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
    } else {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += workers) run_one(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    return ReplicaSet(std::move(records));
}

std::optional<OracleVariance> oracle_variance(const ExperimentPlan& plan, double t, double r) {
    if (t == 0.0) return OracleVariance{0.0, "exact"};
    if (plan.sigma.is_constant()) {
        const double c = plan.sigma.a();
        return OracleVariance{c * c * first_chaos_covariance(t, t, r, plan.hurst), "exact"};
    }
    if (plan.sigma.is_linear()) {
        if (plan.hurst == 0.5) {
            if (r >= 2.0 * t) {
                return OracleVariance{prelimit_variance_white(t, r, MomentCurves::linear(0.5)), "exact_prelimit"};
            }
            return std::nullopt;
        }
        return OracleVariance{std::pow(r, 2.0 * plan.hurst) * asymptotic_variance(t, plan.hurst, MomentCurves::linear(plan.hurst)),
                              "asymptotic"};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

const CellStats& ExperimentSummary::cell(double t, double r) const {
    for (const auto& c : cells) {
        if (same(c.t, t) && same(c.r, r)) return c;
    }
    throw DomainError("summary: no cell for t = " + std::to_string(t) + ", R = " + std::to_string(r));
}

const CovarianceBlock& ExperimentSummary::covariance_at(double r) const {
    for (const auto& b : covariance) {
        if (same(b.r, r)) return b;
    }
    throw DomainError("summary: no covariance block for R = " + std::to_string(r));
}

const IncrementStats& ExperimentSummary::increment(double s, double t, double r) const {
    for (const auto& inc : increments) {
        if (same(inc.s, s) && same(inc.t, t) && same(inc.r, r)) return inc;
    }
    throw DomainError("summary: no increment for (s, t, R) = (" + std::to_string(s) + ", " + std::to_string(t) +
                      ", " + std::to_string(r) + ")");
}

ExperimentSummary summarize(const ExperimentPlan& plan, const ReplicaSet& replicas) {
    plan.validate();
    const auto& recs = replicas.records();
    const std::size_t m = recs.size();
    if (m == 0) throw DomainError("summarize: empty replica set");
    const std::size_t nt = plan.times.size();
    const std::size_t nr = plan.radii.size();
    const LatticeConfig config = plan.lattice();

    ExperimentSummary out;
    out.plan_hash = plan.hash();
    out.kappa = calibrate_kernel(plan.h, plan.hurst);
    out.replicas = m;
    out.se_defined = m >= 2;
    out.ks_defined = m >= 100;
    out.hurst = plan.hurst;
    out.sigma = plan.sigma.describe();
    out.h = plan.h;
    out.times = plan.times;
    out.radii = plan.radii;

    const auto column = [&](auto member, std::size_t idx) {
        std::vector<double> v(m);
        for (std::size_t i = 0; i < m; ++i) v[i] = (recs[i].*member)[idx];
        return v;
    };
    const auto product = [](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> v(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] * b[i];
        return v;
    };

    std::vector<std::vector<double>> g(nt * nr);
    std::vector<std::vector<double>> chaos(nt * nr);
    for (std::size_t c = 0; c < nt * nr; ++c) {
        g[c] = column(&ReplicaRecord::g, c);
        if (plan.chaos) chaos[c] = column(&ReplicaRecord::chaos, c);
    }

    for (std::size_t it = 0; it < nt; ++it) {
        for (std::size_t ir = 0; ir < nr; ++ir) {
            const std::size_t c = it * nr + ir;
            const auto& x = g[c];
            CellStats cs;
            cs.t = plan.times[it];
            cs.r = plan.radii[ir];
            cs.mean = mean_estimate(x);
            const auto sq = product(x, x);
            // E G_R = 0, so second moments are taken about zero.
            const auto var = jackknife(m, [&](std::span<const std::size_t> keep) {
                double s = 0.0;
                for (auto i : keep) s += sq[i];
                return s / static_cast<double>(keep.size());
            });
            cs.variance = {var.estimate, var.se};
            cs.oracle = oracle_variance(plan, cs.t, cs.r);

            if (out.ks_defined && cs.t > 0.0 && cs.variance.value > 0.0) {
                const bool by_oracle = plan.normalization == Normalization::oracle && cs.oracle && cs.oracle->value > 0.0;
                cs.ks_normalization = by_oracle ? "oracle" : (plan.normalization == Normalization::oracle ? "self_fallback" : "self");
                const double oracle_sd = by_oracle ? std::sqrt(cs.oracle->value) : 0.0;
                std::vector<double> scratch;
                const auto res = jackknife(m, [&](std::span<const std::size_t> keep) {
                    scratch.resize(keep.size());
                    double scale = oracle_sd;
                    if (!by_oracle) {
                        double mu = 0.0;
                        for (auto i : keep) mu += x[i];
                        mu /= static_cast<double>(keep.size());
                        double ss = 0.0;
                        for (auto i : keep) ss += (x[i] - mu) * (x[i] - mu);
                        scale = std::sqrt(ss / static_cast<double>(keep.size() - 1));
                    }
                    for (std::size_t q = 0; q < keep.size(); ++q) scratch[q] = x[keep[q]] / scale;
                    return ks_statistic(scratch);
                });
                cs.ks = Estimate{res.estimate, res.se};
            }

            if (plan.chaos) {
                const auto& y = chaos[c];
                const auto yy = product(y, y);
                const auto xy = product(x, y);
                cs.chaos_variance = mean_estimate(yy);
                cs.chaos_covariance = mean_estimate(xy);
                std::vector<double> gap(m);
                for (std::size_t i = 0; i < m; ++i) gap[i] = xy[i] - yy[i];
                cs.orthogonality_gap = mean_estimate(gap);
                const auto ratio = jackknife(m, [&](std::span<const std::size_t> keep) {
                    double a = 0.0;
                    double b = 0.0;
                    for (auto i : keep) {
                        a += yy[i];
                        b += sq[i];
                    }
                    return b > 0.0 ? a / b : kNaN;
                });
                cs.chaos_ratio = Estimate{ratio.estimate, ratio.se};
            }
            out.cells.push_back(std::move(cs));
        }
    }

    for (std::size_t ir = 0; ir < nr; ++ir) {
        CovarianceBlock block;
        block.r = plan.radii[ir];
        block.cov.assign(nt * nt, 0.0);
        block.se.assign(nt * nt, 0.0);
        for (std::size_t i = 0; i < nt; ++i) {
            for (std::size_t j = i; j < nt; ++j) {
                const auto e = mean_estimate(product(g[i * nr + ir], g[j * nr + ir]));
                block.cov[i * nt + j] = block.cov[j * nt + i] = e.value;
                block.se[i * nt + j] = block.se[j * nt + i] = e.se;
            }
        }
        out.covariance.push_back(std::move(block));

        for (std::size_t i = 0; i < nt; ++i) {
            for (std::size_t j = i + 1; j < nt; ++j) {
                IncrementStats inc;
                inc.s = plan.times[i];
                inc.t = plan.times[j];
                inc.r = plan.radii[ir];
                std::vector<double> d2(m);
                std::vector<double> d4(m);
                for (std::size_t q = 0; q < m; ++q) {
                    const double d = g[j * nr + ir][q] - g[i * nr + ir][q];
                    d2[q] = d * d;
                    d4[q] = d2[q] * d2[q];
                }
                inc.second = mean_estimate(d2);
                inc.fourth = mean_estimate(d4);
                out.increments.push_back(inc);
            }
        }
    }

    const std::size_t n_levels = config.levels();
    for (std::size_t n = 0; n <= n_levels; ++n) {
        out.level_times.push_back(static_cast<double>(n) * plan.h);
        const auto eta = mean_estimate(column(&ReplicaRecord::eta, n));
        const auto xi = mean_estimate(column(&ReplicaRecord::xi, n));
        out.eta.push_back(eta.value);
        out.eta_se.push_back(eta.se);
        out.xi.push_back(xi.value);
        out.xi_se.push_back(xi.se);
    }
    return out;
}

ExperimentSummary run_experiment(const ExperimentPlan& plan) {
    const auto start = std::chrono::steady_clock::now();
    auto summary = summarize(plan, simulate_replicas(plan, 0, plan.replicas));
    summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summary;
}

MomentCurves empirical_curves(const ExperimentSummary& summary) {
    return MomentCurves::empirical(summary.level_times, summary.eta, summary.xi, summary.eta_se, summary.xi_se);
}

MomentCurves plan_curves(const ExperimentPlan& plan, const ExperimentSummary& summary) {
    if (plan.sigma.is_constant()) return MomentCurves::constant(plan.sigma.a());
    if (plan.sigma.is_linear()) return MomentCurves::linear(plan.hurst);
    return empirical_curves(summary);
}

std::vector<FunctionalCovCheck> functional_cov_check(const ExperimentSummary& summary, const ExperimentPlan& plan) {
    auto curves = plan_curves(plan, summary);
    if (plan.hurst == 0.5 && !curves.has_xi()) curves = empirical_curves(summary);
    return functional_cov_check(summary, plan, curves);
}

std::vector<FunctionalCovCheck> functional_cov_check(const ExperimentSummary& summary, const ExperimentPlan& plan,
                                                     const MomentCurves& curves) {
    if (plan.times.size() < 2) throw DomainError("functional_cov_check: at least two times are required");
    const std::size_t nt = plan.times.size();
    std::vector<FunctionalCovCheck> out;
    for (double r : plan.radii) {
        const auto& block = summary.covariance_at(r);
        const double scale = std::pow(r, -2.0 * plan.hurst);
        FunctionalCovCheck chk;
        chk.r = r;
        chk.times = plan.times;
        chk.empirical.resize(nt * nt);
        chk.oracle.resize(nt * nt);
        chk.discrepancy.resize(nt * nt);
        chk.se.resize(nt * nt);
        for (std::size_t i = 0; i < nt; ++i) {
            for (std::size_t j = 0; j < nt; ++j) {
                const std::size_t q = i * nt + j;
                const double ti = plan.times[i];
                const double tj = plan.times[j];
                chk.empirical[q] = scale * block.cov[q];
                chk.se[q] = scale * block.se[q];
                chk.oracle[q] = (ti == 0.0 || tj == 0.0) ? 0.0 : cross_covariance(ti, tj, plan.hurst, curves);
                chk.discrepancy[q] = chk.empirical[q] - chk.oracle[q];
            }
        }
        out.push_back(std::move(chk));
    }
    return out;
}

TightnessMoment tightness_moment(const ExperimentSummary& summary, int p, double s, double t, double r) {
    if (p != 2 && p != 4) throw DomainError("tightness_moment: p must be 2 or 4");
    if (s > t) throw DomainError("tightness_moment: requires s <= t");
    TightnessMoment out;
    if (s == t) return out;
    const auto& inc = summary.increment(s, t, r);
    const Estimate& e = p == 2 ? inc.second : inc.fourth;
    out.moment = e.value;
    out.se = e.se;
    out.scale = std::pow(std::pow(r, summary.hurst) * (t - s), p);
    out.ratio = out.moment / out.scale;
    out.ratio_se = out.se / out.scale;
    return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("least_squares_slope: need two or more paired points");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (!(sxx > 0.0)) throw DomainError("least_squares_slope: abscissae are all equal");
    return sxy / sxx;
}

namespace {

// KS of samples divided by their own standard deviation.
double self_normalized_ks(std::span<const double> x, std::vector<double>& scratch) {
    const double mu = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
    scratch.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scratch[i] = x[i] / sd;
    return ks_statistic(scratch);
}

}  // namespace

RateFit ks_rate(const ExperimentPlan& plan, const ReplicaSet& replicas, double t, std::size_t bootstrap,
                double confidence) {
    plan.validate();
    if (plan.radii.size() < 3) throw DomainError("rate: at least three radii are required");
    const std::size_t m = replicas.size();
    if (m < 100) throw DomainError("rate: at least 100 replicas are required");
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("rate: confidence must lie in (0, 1)");
    const auto it_pos = std::find_if(plan.times.begin(), plan.times.end(), [&](double v) { return same(v, t); });
    if (it_pos == plan.times.end() || t <= 0.0) throw DomainError("rate: t must be a positive plan time");
    const auto it = static_cast<std::size_t>(it_pos - plan.times.begin());
    const std::size_t nr = plan.radii.size();

    std::vector<std::vector<double>> g(nr, std::vector<double>(m));
    for (std::size_t q = 0; q < m; ++q) {
        for (std::size_t ir = 0; ir < nr; ++ir) g[ir][q] = replicas.records()[q].g[it * nr + ir];
    }

    RateFit fit;
    fit.t = t;
    fit.confidence = confidence;
    fit.bootstrap = bootstrap;
    std::vector<double> logr(nr);
    std::vector<double> logks(nr);
    std::vector<double> scratch;
    std::vector<double> subset;
    for (std::size_t ir = 0; ir < nr; ++ir) {
        const auto& x = g[ir];
        const auto jk = jackknife(m, [&](std::span<const std::size_t> keep) {
            subset.resize(keep.size());
            for (std::size_t q = 0; q < keep.size(); ++q) subset[q] = x[keep[q]];
            return self_normalized_ks(subset, scratch);
        });
        fit.points.push_back({plan.radii[ir], jk.estimate, jk.se});
        logr[ir] = std::log(plan.radii[ir]);
        logks[ir] = std::log(jk.estimate);
    }
    fit.slope = least_squares_slope(logr, logks);
    for (std::size_t ir = 0; ir + 1 < nr; ++ir) {
        const auto& a = fit.points[ir];
        const auto& b = fit.points[ir + 1];
        if (b.r > a.r && b.ks > a.ks) {
            ++fit.inversions;
            if (b.ks - a.ks > std::hypot(a.se, b.se)) ++fit.significant_inversions;
        }
    }

    if (bootstrap > 0) {
        std::mt19937_64 engine(derive_seed(plan.seed, 0x5EEDB007ULL));
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        std::vector<std::size_t> idx(m);
        std::vector<double> slopes(bootstrap);
        std::vector<double> lk(nr);
        for (std::size_t b = 0; b < bootstrap; ++b) {
            for (auto& i : idx) i = pick(engine);
            for (std::size_t ir = 0; ir < nr; ++ir) {
                subset.resize(m);
                for (std::size_t q = 0; q < m; ++q) subset[q] = g[ir][idx[q]];
                lk[ir] = std::log(self_normalized_ks(subset, scratch));
            }
            slopes[b] = least_squares_slope(logr, lk);
        }
        std::sort(slopes.begin(), slopes.end());
        const auto quantile = [&](double p) {
            const double pos = p * static_cast<double>(bootstrap - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, bootstrap - 1);
            return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
        };
        fit.ci_low = quantile(0.5 * (1.0 - confidence));
        fit.ci_high = quantile(0.5 * (1.0 + confidence));
    } else {
        fit.ci_low = fit.ci_high = kNaN;
    }
    return fit;
}

nlohmann::json to_json(const ExperimentSummary& s) {
    nlohmann::json j;
    j["schema"] = ExperimentSummary::kSchema;
    j["meta"] = {{"plan_hash", s.plan_hash},
                 {"kappa", s.kappa},
                 {"replicas", s.replicas},
                 {"se_defined", s.se_defined},
                 {"ks_defined", s.ks_defined},
                 {"hurst", s.hurst},
                 {"sigma", s.sigma},
                 {"h", s.h},
                 {"times", s.times},
                 {"radii", s.radii}};
    if (s.wall_time_s) j["meta"]["wall_time_s"] = *s.wall_time_s;

    auto& cells = j["cells"] = nlohmann::json::array();
    for (const auto& c : s.cells) {
        nlohmann::json cj = {{"t", c.t},
                             {"R", c.r},
                             {"mean", estimate_json(c.mean)},
                             {"variance", estimate_json(c.variance)},
                             {"ks", optional_estimate(c.ks)},
                             {"ks_normalization", c.ks_normalization.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.ks_normalization)}};
        cj["oracle_variance"] = c.oracle ? nlohmann::json{{"value", number(c.oracle->value)}, {"kind", c.oracle->kind}}
                                         : nlohmann::json(nullptr);
        if (c.chaos_variance) {
            cj["chaos"] = {{"variance", optional_estimate(c.chaos_variance)},
                           {"covariance", optional_estimate(c.chaos_covariance)},
                           {"orthogonality_gap", optional_estimate(c.orthogonality_gap)},
                           {"ratio", optional_estimate(c.chaos_ratio)}};
        }
        cells.push_back(std::move(cj));
    }
    auto& cov = j["covariance"] = nlohmann::json::array();
    for (const auto& b : s.covariance) {
        nlohmann::json cv = nlohmann::json::array();
        nlohmann::json se = nlohmann::json::array();
        for (double v : b.cov) cv.push_back(number(v));
        for (double v : b.se) se.push_back(number(v));
        cov.push_back({{"R", b.r}, {"matrix", cv}, {"se", se}});
    }
    auto& inc = j["increments"] = nlohmann::json::array();
    for (const auto& i : s.increments) {
        inc.push_back({{"s", i.s}, {"t", i.t}, {"R", i.r}, {"p2", estimate_json(i.second)}, {"p4", estimate_json(i.fourth)}});
    }
    nlohmann::json eta = nlohmann::json::array();
    nlohmann::json xi = nlohmann::json::array();
    for (std::size_t n = 0; n < s.level_times.size(); ++n) {
        eta.push_back({number(s.eta[n]), number(s.eta_se[n])});
        xi.push_back({number(s.xi[n]), number(s.xi_se[n])});
    }
    j["moments"] = {{"times", s.level_times}, {"eta", eta}, {"xi", xi}};
    return j;
}

void write_raw_csv(std::ostream& out, const ExperimentPlan& plan, const ReplicaSet& replicas) {
    const auto old_locale = out.imbue(std::locale::classic());
    const auto old_precision = out.precision(17);
    out << "replica_id,t,R,G\n";
    const std::size_t nr = plan.radii.size();
    for (const auto& rec : replicas.records()) {
        for (std::size_t it = 0; it < plan.times.size(); ++it) {
            for (std::size_t ir = 0; ir < nr; ++ir) {
                out << rec.id << ',' << plan.times[it] << ',' << plan.radii[ir] << ',' << rec.g[it * nr + ir] << '\n';
            }
        }
    }
    out.precision(old_precision);
    out.imbue(old_locale);
}

}  // namespace fracwave

#pragma once

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracwave/analytic.hpp"
#include "fracwave/noise.hpp"
#include "fracwave/sigma.hpp"
#include "fracwave/solver.hpp"

namespace fracwave {

/// G_R(t) = ∫_{−R}^{R} (u(t,x) − 1) dx by the trapezoidal rule on the lattice.
/// Throws WindowError if [−R − t, R + t] leaves the window, DomainError if t
/// or R is off the lattice.
double spatial_average(const SolutionField& field, double t, double r);

/// Lattice analogue of φ_R: the coefficient of each source mass ΔW^n_k in
/// G_R(t) when σ ≡ 1. Projecting a sheet onto these weights gives the first
/// chaos I₁(φ_R) of G_R(t).
class ChaosWeights {
public:
    ChaosWeights(const LatticeConfig& config, double kappa, double t, double r);

    std::size_t target_level() const noexcept { return target_level_; }
    /// Σ_{n,k} w(n,k) ΔW^n_k.
    double project(const NoiseSheet& sheet) const;

    /// Coefficient of sheet cell c in any row of level n: w(n, c) + w(n, c + 1)
    /// in node-index terms.
    std::vector<double> cell_coefficients(std::size_t level) const;

    const LatticeConfig& config() const noexcept { return config_; }

private:
    struct Level {
        std::size_t first_node = 0;  // node index (j + J) of weights[0]
        std::vector<double> weights;
    };

    LatticeConfig config_;
    std::size_t target_level_ = 0;
    std::vector<Level> levels_;
};

/// I₁(φ_R) sampled on the sheet that drove `field`.
double chaos_projection(const SolutionField& field, const NoiseSheet& sheet, double t, double r);

/// Exact covariance of two first-chaos projections under the sheet law with
/// the given Hurst index. With σ ≡ 1 this is the exact lattice covariance of G_R.
double lattice_chaos_covariance(const ChaosWeights& a, const ChaosWeights& b, double hurst);

/// sup_x |F_n(x) − Φ(x)| of the samples against the standard normal.
/// Throws DomainError for fewer than 100 samples.
double ks_normality(std::span<const double> samples);
/// The same statistic without the sample-size precondition.
double ks_statistic(std::span<const double> samples);

/// Standard normal CDF.
double normal_cdf(double x);

struct JackknifeResult {
    double estimate = 0.0;
    double se = 0.0;
};

/// Delete-a-group jackknife over `n` samples split into min(n, groups)
/// contiguous groups. `stat` receives the indices kept.
template <class Stat>
JackknifeResult jackknife(std::size_t n, Stat&& stat, std::size_t groups = 100);

enum class Normalization { oracle, self };

/// One Monte Carlo study: M replicas of sheet → solve → statistics over a
/// (time, radius) grid.
struct ExperimentPlan {
    double hurst = 0.5;
    SigmaSpec sigma = SigmaSpec::constant(1.0);
    double h = 1.0 / 64.0;
    std::vector<double> times{1.0};
    std::vector<double> radii{2.0};
    std::size_t replicas = 1000;
    std::uint64_t seed = 1;
    Normalization normalization = Normalization::self;
    bool chaos = true;  ///< also sample I₁(φ_R)
    std::size_t threads = 1;
    /// Simulated half-width; 0 selects max(radii) + max(times).
    double window = 0.0;

    /// Throws DomainError / WindowError naming the violated constraint.
    void validate() const;
    LatticeConfig lattice() const;
    double t_max() const;
    double r_max() const;
    /// Canonical text of every field that affects results (threads excluded).
    std::string fingerprint() const;
    /// FNV-1a of fingerprint(), hex.
    std::string hash() const;
};

/// Statistics recorded for one replica.
struct ReplicaRecord {
    std::size_t id = 0;
    std::vector<double> g;      ///< G_R(t), index it * radii + ir
    std::vector<double> chaos;  ///< I₁, same layout (empty when plan.chaos is off)
    std::vector<double> eta;    ///< per level: spatial mean of σ(u^n)
    std::vector<double> xi;     ///< per level: spatial mean of σ²(u^n)
};

/// Replica store ordered by id. Merging is a sorted union, so any split of
/// the id range reproduces the single-run set exactly.
class ReplicaSet {
public:
    ReplicaSet() = default;
    explicit ReplicaSet(std::vector<ReplicaRecord> records);

    void merge(ReplicaSet other);
    static ReplicaSet merged(ReplicaSet a, ReplicaSet b);

    std::size_t size() const noexcept { return records_.size(); }
    const std::vector<ReplicaRecord>& records() const noexcept { return records_; }

private:
    std::vector<ReplicaRecord> records_;
};

/// Simulate replicas [first, first + count) of `plan`. Replica i uses sheet
/// seed derive_seed(plan.seed, i); results do not depend on thread count.
ReplicaSet simulate_replicas(const ExperimentPlan& plan, std::size_t first, std::size_t count);

/// Closed-form σ_R² for the plan's σ where one exists: exact for σ ≡ c,
/// exact pre-limit for σ(u) = u at H = 1/2 with R >= 2t, asymptotic for
/// σ(u) = u at H > 1/2.
struct OracleVariance {
    double value = 0.0;
    std::string kind;  ///< "exact", "exact_prelimit", "asymptotic"
};
std::optional<OracleVariance> oracle_variance(const ExperimentPlan& plan, double t, double r);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct CellStats {
    double t = 0.0;
    double r = 0.0;
    Estimate mean;
    Estimate variance;
    std::optional<OracleVariance> oracle;
    std::optional<Estimate> ks;  ///< KS distance of normalized samples to N(0,1)
    std::string ks_normalization;
    // First-chaos block (plan.chaos only).
    std::optional<Estimate> chaos_variance;
    std::optional<Estimate> chaos_covariance;     ///< Cov(G_R, I₁)
    std::optional<Estimate> orthogonality_gap;    ///< Cov(G_R, I₁) − Var(I₁)
    std::optional<Estimate> chaos_ratio;          ///< Var(I₁)/Var(G_R)
};

struct IncrementStats {
    double s = 0.0;
    double t = 0.0;
    double r = 0.0;
    Estimate second;  ///< E(G_R(t) − G_R(s))²
    Estimate fourth;  ///< E(G_R(t) − G_R(s))⁴
};

struct CovarianceBlock {
    double r = 0.0;
    std::vector<double> cov;  ///< times² row-major
    std::vector<double> se;
};

struct ExperimentSummary {
    static constexpr const char* kSchema = "fracwave.summary/1";

    std::string plan_hash;
    double kappa = 0.0;
    std::size_t replicas = 0;
    bool se_defined = false;  ///< false for M < 2
    bool ks_defined = false;  ///< false for M < 100
    double hurst = 0.0;
    std::string sigma;
    double h = 0.0;
    std::vector<double> times;
    std::vector<double> radii;
    std::optional<double> wall_time_s;

    std::vector<CellStats> cells;  ///< index it * radii + ir
    std::vector<CovarianceBlock> covariance;
    std::vector<IncrementStats> increments;

    std::vector<double> level_times;
    std::vector<double> eta, eta_se, xi, xi_se;

    const CellStats& cell(double t, double r) const;
    const CovarianceBlock& covariance_at(double r) const;
    const IncrementStats& increment(double s, double t, double r) const;
};

ExperimentSummary summarize(const ExperimentPlan& plan, const ReplicaSet& replicas);

/// simulate_replicas over all plan replicas, then summarize.
ExperimentSummary run_experiment(const ExperimentPlan& plan);

/// Empirical η, ξ curves from the per-level replica moments.
MomentCurves empirical_curves(const ExperimentSummary& summary);
/// Analytic curves when σ is constant or linear (ξ only at H = 1/2),
/// otherwise empirical ones from `summary`.
MomentCurves plan_curves(const ExperimentPlan& plan, const ExperimentSummary& summary);

/// Empirical R^{−2H}Cov(G_R(t_i), G_R(t_j)) minus the limiting covariance.
struct FunctionalCovCheck {
    double r = 0.0;
    std::vector<double> times;
    std::vector<double> empirical;  ///< scaled by R^{−2H}
    std::vector<double> oracle;
    std::vector<double> discrepancy;
    std::vector<double> se;  ///< scaled SE of empirical entries
};
std::vector<FunctionalCovCheck> functional_cov_check(const ExperimentSummary& summary,
                                                     const ExperimentPlan& plan);
std::vector<FunctionalCovCheck> functional_cov_check(const ExperimentSummary& summary,
                                                     const ExperimentPlan& plan,
                                                     const MomentCurves& curves);

/// E|G_R(t) − G_R(s)|^p next to its scale R^{pH}(t − s)^p.
struct TightnessMoment {
    double moment = 0.0;
    double se = 0.0;
    double scale = 0.0;
    double ratio = 0.0;
    double ratio_se = 0.0;
};
TightnessMoment tightness_moment(const ExperimentSummary& summary, int p, double s, double t, double r);

/// KS distance of self-normalized G_R(t) against log R: least-squares slope
/// of log KS on log R with a percentile bootstrap CI that resamples replicas
/// jointly across radii.
struct RatePoint {
    double r = 0.0;
    double ks = 0.0;
    double se = 0.0;  ///< grouped jackknife
};
struct RateFit {
    double t = 0.0;
    std::vector<RatePoint> points;
    double slope = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double confidence = 0.95;
    std::size_t bootstrap = 0;
    /// Adjacent pairs with KS increasing in R, and how many of them exceed
    /// the combined SE of the pair.
    std::size_t inversions = 0;
    std::size_t significant_inversions = 0;
};
/// Requires at least three radii and 100 replicas (DomainError otherwise).
RateFit ks_rate(const ExperimentPlan& plan, const ReplicaSet& replicas, double t, std::size_t bootstrap = 400,
                double confidence = 0.95);

/// Least-squares slope of y on x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

nlohmann::json to_json(const ExperimentSummary& summary);
/// Raw samples as CSV with columns replica_id,t,R,G.
void write_raw_csv(std::ostream& out, const ExperimentPlan& plan, const ReplicaSet& replicas);

// ---------------------------------------------------------------------------

template <class Stat>
JackknifeResult jackknife(std::size_t n, Stat&& stat, std::size_t groups) {
    JackknifeResult out;
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    out.estimate = stat(std::span<const std::size_t>(all));
    const std::size_t g = std::min(n, groups);
    if (g < 2) {
        out.se = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    std::vector<double> pseudo(g);
    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t k = 0; k < g; ++k) {
        const std::size_t lo = k * n / g;
        const std::size_t hi = (k + 1) * n / g;
        keep.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (i < lo || i >= hi) keep.push_back(i);
        }
        pseudo[k] = stat(std::span<const std::size_t>(keep));
    }
    double mean = 0.0;
    for (double v : pseudo) mean += v;
    mean /= static_cast<double>(g);
    double ss = 0.0;
    for (double v : pseudo) ss += (v - mean) * (v - mean);
    out.se = std::sqrt(ss * static_cast<double>(g - 1) / static_cast<double>(g));
    return out;
}

}  // namespace fracwave

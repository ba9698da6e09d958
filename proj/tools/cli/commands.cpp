#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "fracwave/analytic.hpp"
#include "fracwave/error.hpp"
#include "fracwave/estimators.hpp"
#include "fracwave/noise.hpp"

namespace fracwave::cli {

namespace {

using json = nlohmann::json;

json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- oracle --

struct OracleArgs {
    double x = 0.0, xi = 0.0, t = 1.0, s = 1.0, ti = 0.5, tj = 1.0, hurst = 0.5;
    double a = 1.0, b = 2.0, r = 0.0, c = 1.0, step = 1e-4;
    std::string sigma = "constant";
};

json oracle_cone(const OracleArgs& o) {
    const bool white = o.hurst == 0.5;
    const double v = white ? white_cone_overlap(o.x, o.xi, o.t, o.s) : cone_inner_product(o.x, o.xi, o.t, o.s, o.hurst);
    return {{"inputs", {{"x", o.x}, {"xi", o.xi}, {"t", o.t}, {"s", o.s}, {"H", o.hurst}}},
            {"value", v},
            {"method", white ? "twice the overlap length of the two intervals" : "closed form in |x - xi +- t +- s|^{2H}"},
            {"tolerance", 0.0}};
}

json oracle_overlap(const OracleArgs& o) {
    return {{"inputs", {{"a", o.a}, {"b", o.b}, {"R", o.r}}},
            {"value", phi_overlap(o.a, o.b, o.r)},
            {"method", "closed form 2ab - (ab^2/2 + a^3/6)/R"},
            {"tolerance", 0.0}};
}

MomentCurves curves_for(const OracleArgs& o) {
    if (o.sigma == "constant") return MomentCurves::constant(o.c);
    if (o.sigma == "linear") return MomentCurves::linear(o.hurst);
    throw DomainError("oracle: --sigma must be constant or linear");
}

json oracle_variance(const OracleArgs& o) {
    json in = {{"t", o.t}, {"H", o.hurst}, {"sigma", o.sigma}};
    if (o.sigma == "constant") in["c"] = o.c;
    if (o.r > 0.0) {
        in["R"] = o.r;
        if (o.sigma == "constant") {
            return {{"inputs", in},
                    {"value", o.c * o.c * first_chaos_covariance(o.t, o.t, o.r, o.hurst)},
                    {"method", "exact E G_R^2: closed-form spatial integral, adaptive Gauss-Kronrod in time"},
                    {"tolerance", 1e-12}};
        }
        if (o.sigma == "linear" && o.hurst == 0.5) {
            return {{"inputs", in},
                    {"value", prelimit_variance_white(o.t, o.r, MomentCurves::linear(0.5))},
                    {"method", "exact pre-limit E G_R^2 with xi(s) = cosh(s/sqrt 2), Gauss-Kronrod"},
                    {"tolerance", 1e-12}};
        }
        throw DomainError("oracle variance: no finite-R closed form for this sigma and H; omit --R for the limit");
    }
    return {{"inputs", in},
            {"value", asymptotic_variance(o.t, o.hurst, curves_for(o))},
            {"method", "lim R^{-2H} E G_R^2 by Gauss-Kronrod quadrature"},
            {"tolerance", 1e-12}};
}

json oracle_cov(const OracleArgs& o) {
    json in = {{"ti", o.ti}, {"tj", o.tj}, {"H", o.hurst}, {"sigma", o.sigma}};
    if (o.sigma == "constant") in["c"] = o.c;
    if (o.r > 0.0) {
        if (o.sigma != "constant") throw DomainError("oracle cov: finite-R covariance needs --sigma constant");
        in["R"] = o.r;
        return {{"inputs", in},
                {"value", o.c * o.c * first_chaos_covariance(o.ti, o.tj, o.r, o.hurst)},
                {"method", "exact E G_R(ti) G_R(tj) by Gauss-Kronrod"},
                {"tolerance", 1e-12}};
    }
    return {{"inputs", in},
            {"value", cross_covariance(o.ti, o.tj, o.hurst, curves_for(o))},
            {"method", "limiting covariance by Gauss-Kronrod quadrature"},
            {"tolerance", 1e-12}};
}

json oracle_chaos1(const OracleArgs& o) {
    const bool closed = o.hurst == 0.5;
    return {{"inputs", {{"t", o.t}, {"R", o.r}, {"H", o.hurst}}},
            {"value", first_chaos_variance(o.t, o.r, o.hurst)},
            {"method", closed ? "closed form (2/3)Rt^3 - t^4/6" : "closed-form spatial integral, Gauss-Kronrod in time"},
            {"tolerance", closed ? 0.0 : 1e-12}};
}

json oracle_volterra(const OracleArgs& o) {
    const double stepped = volterra_xi_linear_stepped(o.t, o.step);
    const double closed = volterra_xi_linear(o.t);
    return {{"inputs", {{"t", o.t}, {"step", o.step}}},
            {"value", stepped},
            {"closed_form", closed},
            {"method", "trapezoidal Volterra stepping of m(t) = 1 + (1/2) int (t-s) m(s) ds"},
            {"tolerance", std::max(1e-12, 10.0 * std::abs(stepped - closed))}};
}

// --------------------------------------------------------------- runners --

std::string fixed(double v, int precision) {
    if (!std::isfinite(v)) return "-";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(precision) << v;
    return os.str();
}

void print_table(std::ostream& out, const ExperimentSummary& s) {
    out << "replicas " << s.replicas << "  sigma " << s.sigma << "  H " << fixed(s.hurst, 6) << "  h "
        << fixed(s.h, 6) << "  kappa " << fixed(s.kappa, 10) << "  plan " << s.plan_hash << '\n';
    out << std::left << std::setw(8) << "t" << std::setw(8) << "R" << std::setw(24) << "var (se)" << std::setw(14)
        << "oracle var" << std::setw(22) << "KS (se)" << "chaos ratio (se)\n";
    for (const auto& c : s.cells) {
        out << std::setw(8) << fixed(c.t, 6) << std::setw(8) << fixed(c.r, 6) << std::setw(24)
            << (fixed(c.variance.value, 7) + " (" + fixed(c.variance.se, 3) + ")") << std::setw(14)
            << (c.oracle ? fixed(c.oracle->value, 7) : "-") << std::setw(22)
            << (c.ks ? fixed(c.ks->value, 5) + " (" + fixed(c.ks->se, 3) + ")" : "-")
            << (c.chaos_ratio ? fixed(c.chaos_ratio->value, 6) + " (" + fixed(c.chaos_ratio->se, 3) + ")" : "-")
            << '\n';
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot write " + path.string());
    f << content;
    if (!f) throw std::ios_base::failure("write failed for " + path.string());
}

RunConfig config_with_overrides(const std::string& path, std::size_t threads) {
    RunConfig cfg = load_config(path);
    if (threads > 0) cfg.threads = threads;
    return cfg;
}

int cmd_simulate(const std::string& path, bool deterministic, std::size_t threads, const std::string& out_dir,
                 std::ostream& out, std::ostream& err) {
    RunConfig cfg = config_with_overrides(path, threads);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const ExperimentPlan plan = cfg.resolved_plan();
    plan.validate();
    const auto start = std::chrono::steady_clock::now();
    const ReplicaSet replicas = simulate_replicas(plan, 0, plan.replicas);
    ExperimentSummary summary = summarize(plan, replicas);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!deterministic) summary.wall_time_s = wall;
    err << "simulated " << replicas.size() << " replicas in " << fixed(wall, 4) << " s\n";

    const auto summary_path = cfg.output_dir / cfg.summary_file;
    write_file(summary_path, to_json(summary).dump(2) + "\n");
    if (cfg.emit_raw) {
        std::ostringstream csv;
        write_raw_csv(csv, plan, replicas);
        write_file(cfg.output_dir / cfg.raw_file, csv.str());
    }
    print_table(out, summary);
    out << "summary: " << summary_path.string() << '\n';
    return kOk;
}

int cmd_rate(const std::string& path, double t, std::size_t bootstrap, std::size_t threads,
             const std::string& csv_path, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = config_with_overrides(path, threads);
    const ExperimentPlan plan = cfg.resolved_plan();
    if (plan.radii.size() < 3) throw DomainError("rate: at least three radii are required");
    plan.validate();
    const double at = t > 0.0 ? t : plan.t_max();
    const ReplicaSet replicas = simulate_replicas(plan, 0, plan.replicas);
    const RateFit fit = ks_rate(plan, replicas, at, bootstrap);

    std::ostringstream csv;
    csv.imbue(std::locale::classic());
    csv << std::setprecision(17) << "R,KS,SE\n";
    for (const auto& p : fit.points) csv << p.r << ',' << p.ks << ',' << p.se << '\n';
    csv << "# t=" << fit.t << " slope=" << fit.slope << " ci_low=" << fit.ci_low << " ci_high=" << fit.ci_high
        << " confidence=" << fit.confidence << " bootstrap=" << fit.bootstrap << " inversions=" << fit.inversions
        << " significant_inversions=" << fit.significant_inversions << '\n';
    if (!csv_path.empty()) {
        write_file(csv_path, csv.str());
        err << "rate: wrote " << csv_path << '\n';
    }
    out << csv.str();
    return kOk;
}

int cmd_funcclt(const std::string& path, std::size_t threads, std::ostream& out) {
    const RunConfig cfg = config_with_overrides(path, threads);
    const ExperimentPlan plan = cfg.resolved_plan();
    if (plan.times.size() < 2) throw DomainError("funcclt: at least two times are required");
    const ExperimentSummary summary = summarize(plan, simulate_replicas(plan, 0, plan.replicas));
    const auto checks = functional_cov_check(summary, plan);
    json arr = json::array();
    for (const auto& c : checks) {
        json emp = json::array(), orc = json::array(), dis = json::array(), se = json::array();
        for (std::size_t q = 0; q < c.empirical.size(); ++q) {
            emp.push_back(number(c.empirical[q]));
            orc.push_back(number(c.oracle[q]));
            dis.push_back(number(c.discrepancy[q]));
            se.push_back(number(c.se[q]));
        }
        arr.push_back({{"R", c.r}, {"times", c.times}, {"empirical", emp}, {"oracle", orc}, {"discrepancy", dis}, {"se", se}});
    }
    print_json(out, {{"plan_hash", summary.plan_hash}, {"replicas", summary.replicas}, {"checks", arr}});
    return kOk;
}

int cmd_noise_dump(const NoiseSpec& spec, const std::string& path, std::ostream& out) {
    const NoiseSheet sheet = sample_sheet(spec);
    write_sheet(std::filesystem::path(path), sheet);
    out << "wrote " << sheet.rows() << " x " << sheet.cols() << " sheet to " << path << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fracwave: stochastic wave equation simulation lab"};
    app.require_subcommand(1);

    // oracle
    OracleArgs o;
    auto* oracle = app.add_subcommand("oracle", "Closed-form and quadrature reference values (JSON)");
    oracle->require_subcommand(1);
    auto* cone = oracle->add_subcommand("cone", "Noise inner product of two light-cone indicators");
    cone->add_option("--x", o.x)->required();
    cone->add_option("--xi", o.xi)->required();
    cone->add_option("--t", o.t)->required();
    cone->add_option("--s", o.s)->required();
    cone->add_option("--H", o.hurst)->required();
    auto* overlap = oracle->add_subcommand("overlap", "Normalized overlap of two spatial weights");
    overlap->add_option("--a", o.a)->required();
    overlap->add_option("--b", o.b)->required();
    overlap->add_option("--R", o.r)->required();
    auto* variance = oracle->add_subcommand("variance", "Variance of G_R(t): finite R or the R^{-2H} limit");
    variance->add_option("--t", o.t)->required();
    variance->add_option("--H", o.hurst);
    variance->add_option("--R", o.r, "finite radius (omit for the limit)");
    variance->add_option("--sigma", o.sigma, "constant or linear")->check(CLI::IsMember({"constant", "linear"}));
    variance->add_option("--c", o.c, "value of a constant sigma");
    auto* cov = oracle->add_subcommand("cov", "Covariance of G_R(ti), G_R(tj): finite R or the limit");
    cov->add_option("--ti", o.ti)->required();
    cov->add_option("--tj", o.tj)->required();
    cov->add_option("--H", o.hurst);
    cov->add_option("--R", o.r, "finite radius (constant sigma only)");
    cov->add_option("--sigma", o.sigma)->check(CLI::IsMember({"constant", "linear"}));
    cov->add_option("--c", o.c);
    auto* chaos1 = oracle->add_subcommand("chaos1", "Variance of the first-chaos projection");
    chaos1->add_option("--t", o.t)->required();
    chaos1->add_option("--R", o.r)->required();
    chaos1->add_option("--H", o.hurst);
    auto* volterra = oracle->add_subcommand("volterra", "Second moment of u for sigma(u) = u, H = 1/2");
    volterra->add_option("--t", o.t)->required();
    volterra->add_option("--step", o.step)->check(CLI::PositiveNumber);

    // simulate / rate / funcclt
    std::string config_path;
    std::string out_dir;
    std::string csv_path;
    bool deterministic = false;
    std::size_t threads = 0;
    double rate_t = 0.0;
    std::size_t bootstrap = 400;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a config file");
    simulate->add_option("config", config_path)->required();
    simulate->add_flag("--deterministic", deterministic, "omit wall-clock time from the summary");
    simulate->add_option("--output-dir", out_dir, "override output.directory");
    simulate->add_option("--threads", threads, "override run.threads");
    auto* rate = app.add_subcommand("rate", "KS distance against R with a fitted log-log slope (CSV)");
    rate->add_option("config", config_path)->required();
    rate->add_option("--t", rate_t, "observation time (default: largest plan time)");
    rate->add_option("--bootstrap", bootstrap, "bootstrap resamples for the slope CI");
    rate->add_option("--csv", csv_path, "also write the CSV here");
    rate->add_option("--threads", threads);
    auto* funcclt = app.add_subcommand("funcclt", "Empirical vs limiting covariance over plan times (JSON)");
    funcclt->add_option("config", config_path)->required();
    funcclt->add_option("--threads", threads);

    // noise-dump
    NoiseSpec spec;
    std::string dump_path;
    auto* dump = app.add_subcommand("noise-dump", "Sample one noise sheet and write the binary dump");
    dump->add_option("--hurst", spec.hurst);
    dump->add_option("--dt", spec.dt);
    dump->add_option("--dx", spec.dx);
    dump->add_option("--n-time", spec.n_time)->required();
    dump->add_option("--n-space", spec.n_space)->required();
    dump->add_option("--seed", spec.seed);
    dump->add_option("--out", dump_path)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "fracwave: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (oracle->parsed()) {
            json result;
            if (cone->parsed()) result = oracle_cone(o);
            else if (overlap->parsed()) result = oracle_overlap(o);
            else if (variance->parsed()) result = oracle_variance(o);
            else if (cov->parsed()) result = oracle_cov(o);
            else if (chaos1->parsed()) result = oracle_chaos1(o);
            else result = oracle_volterra(o);
            print_json(out, result);
            return kOk;
        }
        if (simulate->parsed()) return cmd_simulate(config_path, deterministic, threads, out_dir, out, err);
        if (rate->parsed()) return cmd_rate(config_path, rate_t, bootstrap, threads, csv_path, out, err);
        if (funcclt->parsed()) return cmd_funcclt(config_path, threads, out);
        if (dump->parsed()) return cmd_noise_dump(spec, dump_path, out);
    } catch (const ConfigError& e) {
        err << "fracwave: " << e.what() << '\n';
        return kUsageError;
    } catch (const WindowError& e) {
        err << "fracwave: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const DomainError& e) {
        err << "fracwave: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "fracwave: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

}  // namespace fracwave::cli

#include "config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace fracwave::cli {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

double parse_plain_double(const std::string& text, const std::string& key) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("config: " + key + ": not a number: '" + text + "'");
    return v;
}

// Decimal or a/b fraction, e.g. "1/64".
double parse_double(const std::string& raw, const std::string& key) {
    const std::string text = trim(raw);
    if (const auto slash = text.find('/'); slash != std::string::npos) {
        const double num = parse_plain_double(trim(text.substr(0, slash)), key);
        const double den = parse_plain_double(trim(text.substr(slash + 1)), key);
        if (den == 0.0) throw ConfigError("config: " + key + ": zero denominator");
        return num / den;
    }
    return parse_plain_double(text, key);
}

std::uint64_t parse_unsigned(const std::string& raw, const std::string& key) {
    const std::string text = trim(raw);
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError("config: " + key + ": not a non-negative integer: '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& raw, const std::string& key) {
    const std::string text = trim(raw);
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError("config: " + key + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& raw, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_double(item, key));
    }
    return out;
}

std::string format(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ", ";
        out += format(values[i]);
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment", {"hurst", "h", "times", "radii", "replicas", "seed", "normalization", "chaos", "window"}},
        {"sigma", {"kind", "a", "b", "knots", "values"}},
        {"output", {"directory", "summary", "emit_raw", "raw"}},
        {"run", {"threads"}},
    };
    return keys;
}

SigmaSpec parse_sigma(const pt::ptree& section) {
    const std::string kind = trim(section.get<std::string>("kind", "constant"));
    const auto require_only = [&](std::set<std::string> allowed) {
        allowed.insert("kind");
        for (const auto& [key, _] : section) {
            if (!allowed.count(key)) throw ConfigError("config: sigma." + key + " is not used by kind " + kind);
        }
    };
    const auto number = [&](const char* key, double fallback) {
        const auto v = section.get_optional<std::string>(key);
        return v ? parse_double(*v, std::string("sigma.") + key) : fallback;
    };
    try {
        if (kind == "constant") {
            require_only({"a"});
            return SigmaSpec::constant(number("a", 1.0));
        }
        if (kind == "linear") {
            require_only({});
            return SigmaSpec::linear();
        }
        if (kind == "affine") {
            require_only({"a", "b"});
            return SigmaSpec::affine(number("a", 0.0), number("b", 1.0));
        }
        if (kind == "affine_sine") {
            require_only({"a", "b"});
            return SigmaSpec::affine_sine(number("a", 1.0), number("b", 0.5));
        }
        if (kind == "tabulated") {
            require_only({"knots", "values"});
            return SigmaSpec::tabulated(parse_list(section.get<std::string>("knots", ""), "sigma.knots"),
                                        parse_list(section.get<std::string>("values", ""), "sigma.values"));
        }
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config: sigma: ") + e.what());
    }
    throw ConfigError("config: sigma.kind: unknown kind '" + kind + "'");
}

void write_sigma(std::ostream& out, const SigmaSpec& s) {
    out << "[sigma]\n";
    if (s.is_linear()) {
        out << "kind = linear\n";
        return;
    }
    switch (s.kind()) {
        case SigmaSpec::Kind::constant:
            out << "kind = constant\na = " << format(s.a()) << '\n';
            break;
        case SigmaSpec::Kind::affine:
            out << "kind = affine\na = " << format(s.a()) << "\nb = " << format(s.b()) << '\n';
            break;
        case SigmaSpec::Kind::affine_sine:
            out << "kind = affine_sine\na = " << format(s.a()) << "\nb = " << format(s.b()) << '\n';
            break;
        case SigmaSpec::Kind::tabulated:
            out << "kind = tabulated\nknots = "
                << format_list({s.knots().begin(), s.knots().end()}) << "\nvalues = "
                << format_list({s.values().begin(), s.values().end()}) << '\n';
            break;
    }
}

}  // namespace

ExperimentPlan RunConfig::resolved_plan() const {
    ExperimentPlan p = plan;
    p.threads = threads;
    return p;
}

bool RunConfig::operator==(const RunConfig& o) const {
    return plan.fingerprint() == o.plan.fingerprint() && output_dir == o.output_dir &&
           summary_file == o.summary_file && emit_raw == o.emit_raw && raw_file == o.raw_file &&
           threads == o.threads;
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
    }
    const auto& known = schema();
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) {
            if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
            throw ConfigError("config: unknown section [" + section + "]");
        }
        for (const auto& [key, _] : body) {
            if (!it->second.count(key)) throw ConfigError("config: unknown key " + section + "." + key);
        }
    }

    RunConfig cfg;
    auto& plan = cfg.plan;
    if (const auto ex = tree.get_child_optional("experiment")) {
        const auto get = [&](const char* key) { return ex->get_optional<std::string>(key); };
        if (auto v = get("hurst")) plan.hurst = parse_double(*v, "experiment.hurst");
        if (auto v = get("h")) plan.h = parse_double(*v, "experiment.h");
        if (auto v = get("times")) plan.times = parse_list(*v, "experiment.times");
        if (auto v = get("radii")) plan.radii = parse_list(*v, "experiment.radii");
        if (auto v = get("replicas")) plan.replicas = parse_unsigned(*v, "experiment.replicas");
        if (auto v = get("seed")) plan.seed = parse_unsigned(*v, "experiment.seed");
        if (auto v = get("window")) plan.window = parse_double(*v, "experiment.window");
        if (auto v = get("chaos")) plan.chaos = parse_bool(*v, "experiment.chaos");
        if (auto v = get("normalization")) {
            const std::string n = trim(*v);
            if (n == "oracle") plan.normalization = Normalization::oracle;
            else if (n == "self") plan.normalization = Normalization::self;
            else throw ConfigError("config: experiment.normalization: expected oracle or self, got '" + n + "'");
        }
    }
    if (const auto sg = tree.get_child_optional("sigma")) plan.sigma = parse_sigma(*sg);
    if (const auto out = tree.get_child_optional("output")) {
        if (auto v = out->get_optional<std::string>("directory")) cfg.output_dir = trim(*v);
        if (auto v = out->get_optional<std::string>("summary")) cfg.summary_file = trim(*v);
        if (auto v = out->get_optional<std::string>("raw")) cfg.raw_file = trim(*v);
        if (auto v = out->get_optional<std::string>("emit_raw")) cfg.emit_raw = parse_bool(*v, "output.emit_raw");
    }
    if (const auto run = tree.get_child_optional("run")) {
        if (auto v = run->get_optional<std::string>("threads")) cfg.threads = parse_unsigned(*v, "run.threads");
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config " + path.string());
    return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
    const auto& p = cfg.plan;
    out << "[experiment]\n"
        << "hurst = " << format(p.hurst) << '\n'
        << "h = " << format(p.h) << '\n'
        << "times = " << format_list(p.times) << '\n'
        << "radii = " << format_list(p.radii) << '\n'
        << "replicas = " << p.replicas << '\n'
        << "seed = " << p.seed << '\n'
        << "normalization = " << (p.normalization == Normalization::oracle ? "oracle" : "self") << '\n'
        << "chaos = " << (p.chaos ? "true" : "false") << '\n'
        << "window = " << format(p.window) << "\n\n";
    write_sigma(out, p.sigma);
    out << "\n[output]\n"
        << "directory = " << cfg.output_dir.string() << '\n'
        << "summary = " << cfg.summary_file << '\n'
        << "emit_raw = " << (cfg.emit_raw ? "true" : "false") << '\n'
        << "raw = " << cfg.raw_file << "\n\n"
        << "[run]\n"
        << "threads = " << cfg.threads << '\n';
}

std::string to_string(const RunConfig& cfg) {
    std::ostringstream os;
    write_config(os, cfg);
    return os.str();
}

}  // namespace fracwave::cli

#include <gtest/gtest.h>

#include <clocale>
#include <sstream>

#include "cli/config.hpp"

using namespace fracwave;
using namespace fracwave::cli;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

RunConfig reparse(const RunConfig& c) { return parse(to_string(c)); }

}  // namespace

TEST(RunConfig, DefaultsFromEmptyFile) {
    const auto c = parse("");
    EXPECT_EQ(c.plan.hurst, 0.5);
    EXPECT_TRUE(c.plan.sigma.is_constant());
    EXPECT_EQ(c.threads, 0u);
    EXPECT_FALSE(c.emit_raw);
    EXPECT_EQ(c.summary_file, "summary.json");
}

TEST(RunConfig, ParsesEverySection) {
    const auto c = parse(
        "# comment\n"
        "[experiment]\nhurst = 0.75\nh = 1/32\ntimes = 0.5, 1\nradii = 8,16 , 32\nreplicas = 250\nseed = 17\n"
        "normalization = oracle\nchaos = false\nwindow = 40\n"
        "[sigma]\nkind = affine_sine\na = 1\nb = 0.5\n"
        "[output]\ndirectory = out/x\nsummary = s.json\nemit_raw = true\nraw = r.csv\n"
        "[run]\nthreads = 3\n");
    EXPECT_EQ(c.plan.hurst, 0.75);
    EXPECT_EQ(c.plan.h, 1.0 / 32);
    EXPECT_EQ(c.plan.times, (std::vector<double>{0.5, 1.0}));
    EXPECT_EQ(c.plan.radii, (std::vector<double>{8, 16, 32}));
    EXPECT_EQ(c.plan.replicas, 250u);
    EXPECT_EQ(c.plan.seed, 17u);
    EXPECT_EQ(c.plan.normalization, Normalization::oracle);
    EXPECT_FALSE(c.plan.chaos);
    EXPECT_EQ(c.plan.window, 40.0);
    EXPECT_EQ(c.plan.sigma, SigmaSpec::affine_sine(1.0, 0.5));
    EXPECT_EQ(c.output_dir, "out/x");
    EXPECT_TRUE(c.emit_raw);
    EXPECT_EQ(c.raw_file, "r.csv");
    EXPECT_EQ(c.threads, 3u);
    EXPECT_EQ(c.resolved_plan().threads, 3u);
}

TEST(RunConfig, RoundTripIsIdentity) {
    RunConfig c;
    c.plan.hurst = 0.6180339887498949;
    c.plan.h = 1.0 / 3.0 / 64.0;
    c.plan.times = {0.1, 1.0 / 3.0};
    c.plan.radii = {2.0 / 3.0, 5.0};
    c.plan.seed = 0xFFFFFFFFFFFFFFFFULL;
    c.plan.normalization = Normalization::oracle;
    c.emit_raw = true;
    c.threads = 8;
    for (const auto& s : {SigmaSpec::constant(0.1), SigmaSpec::linear(), SigmaSpec::affine(-1.0, 1.0),
                          SigmaSpec::affine_sine(1.0, 0.5), SigmaSpec::tabulated({-1.0, 0.3, 2.0}, {0.2, 1.0 / 7.0, 3.0})}) {
        c.plan.sigma = s;
        const auto once = reparse(c);
        EXPECT_EQ(once, c) << s.describe();
        EXPECT_EQ(to_string(once), to_string(c));
        EXPECT_EQ(reparse(once), once);
    }
}

TEST(RunConfig, LocaleIndependentOutput) {
    RunConfig c;
    c.plan.h = 0.015625;
    const char* old = std::setlocale(LC_NUMERIC, nullptr);
    const std::string saved = old ? old : "C";
    std::setlocale(LC_NUMERIC, "de_DE.UTF-8");
    const std::string text = to_string(c);
    std::setlocale(LC_NUMERIC, saved.c_str());
    EXPECT_NE(text.find("h = 0.015625"), std::string::npos);
}

TEST(RunConfig, RejectsUnknownKeysAndSections) {
    EXPECT_THROW(parse("[experiment]\nhurts = 0.5\n"), ConfigError);
    EXPECT_THROW(parse("[experimnt]\nhurst = 0.5\n"), ConfigError);
    EXPECT_THROW(parse("hurst = 0.5\n"), ConfigError);
    EXPECT_THROW(parse("[sigma]\nkind = constant\nb = 2\n"), ConfigError);
    EXPECT_THROW(parse("[sigma]\nkind = linear\na = 2\n"), ConfigError);
}

TEST(RunConfig, RejectsBadValues) {
    EXPECT_THROW(parse("[experiment]\nhurst = half\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nh = 1/0\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nreplicas = -4\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nchaos = yes\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nnormalization = none\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\ntimes = 1, x\n"), ConfigError);
    EXPECT_THROW(parse("[sigma]\nkind = cubic\n"), ConfigError);
    EXPECT_THROW(parse("[sigma]\nkind = tabulated\nknots = 1\nvalues = 1\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nhurst = 0.5\nhurst = 0.6\n"), ConfigError);
    EXPECT_THROW(parse("[experiment\n"), ConfigError);
}

TEST(RunConfig, BundledConfigsParse) {
    for (const char* name : {"constant_sigma.ini", "sine_rate.ini", "linear_fractional.ini"}) {
        const auto c = load_config(std::filesystem::path(FRACWAVE_SOURCE_DIR) / "configs" / name);
        EXPECT_NO_THROW(c.plan.validate()) << name;
    }
    EXPECT_THROW(load_config("/nonexistent/fracwave.ini"), std::ios_base::failure);
}

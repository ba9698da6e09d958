#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "fracwave/estimators.hpp"

namespace fracwave::cli {

/// Malformed config text, unknown keys or invalid values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything `simulate`, `rate` and `funcclt` read from a config file.
///
/// File format: sectioned key = value text ([experiment], [sigma], [output]).
/// Lists are comma separated. Unknown sections or keys are rejected.
struct RunConfig {
    ExperimentPlan plan;
    std::filesystem::path output_dir = "fracwave-out";
    std::string summary_file = "summary.json";
    bool emit_raw = false;
    std::string raw_file = "raw.csv";
    std::size_t threads = 0;  ///< 0 = FRACWAVE_THREADS, else hardware concurrency

    /// Plan with the thread count applied.
    ExperimentPlan resolved_plan() const;
    bool operator==(const RunConfig& other) const;
};

/// Throws ConfigError on syntax errors, unknown keys or bad values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Every key is written, doubles in shortest round-trip form.
void write_config(std::ostream& out, const RunConfig& config);
std::string to_string(const RunConfig& config);

}  // namespace fracwave::cli

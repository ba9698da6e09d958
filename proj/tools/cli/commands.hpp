#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracwave::cli {

/// Exit codes of the fracwave tool.
enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Run the tool on `args` (program name excluded), writing results to `out`
/// and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracwave::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace edmm::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // replay, trace or I/O error
inline constexpr int kExitUsage = 2;    // bad flags or parameter values

// Runs one edmm-sim invocation. `args` excludes the program name. Reports go
// to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edmm::cli

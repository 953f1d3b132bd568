#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hitchin::cli {

// Exit codes of the command-line driver.
inline constexpr int kSuccess = 0;
inline constexpr int kCheckFailure = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kNumericalFailure = 3;

// Runs `hitchin <args...>` (args excludes the program name). Progress and
// summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Maps an error kind onto an exit code.
int exit_code_for(const std::string& kind);

}  // namespace hitchin::cli

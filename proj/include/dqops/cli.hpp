#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dqops {

/// Process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_fail = 1,
  exit_refresh = 2,
  exit_usage = 3,
  exit_data = 4,
};

inline constexpr const char* version_string = "0.1.0";

/// Runs the command line `args` (without the program name). Results go to
/// `out`, diagnostics and summaries to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dqops

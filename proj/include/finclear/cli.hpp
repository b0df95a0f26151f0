#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace finclear {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_validation = 2, exit_capability = 3 };

/// Runs the command line `args` (without the program name) and returns the
/// process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace finclear

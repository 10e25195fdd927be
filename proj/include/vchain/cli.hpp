#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vchain {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitInternal = 2 };

/// Runs the `vchain` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vchain

#pragma once

#include "adalam/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace adalam {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
};

/// Runs the command line `args` (without the program name). Data goes to
/// `out` or to files, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

/// AdalamParams as parsed from `filter` flags alone, for checking that CLI
/// defaults track the library defaults.
AdalamParams adalam_params_from_flags(const std::vector<std::string>& flags);

}  // namespace adalam

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace deadend {

enum ExitCode : int {
  kExitOk = 0,
  kExitUnconverged = 2,
  kExitInputError = 3,
  kExitDeadStart = 4,
};

/// The deadend-mdp command line; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deadend

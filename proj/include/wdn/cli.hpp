#pragma once

#include <string>
#include <vector>

namespace wdn {

/// Command-line entry point (build | solve | simulate-quality | obbt).
/// Returns the process exit code: 0 ok, 1 solver-reported infeasibility or
/// no solution, 2 input error, 3 internal error.
int run_cli(const std::vector<std::string>& args);

}  // namespace wdn

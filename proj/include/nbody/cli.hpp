#pragma once

#include <string>
#include <vector>

namespace nbody {

/// Runs one CLI invocation (argv without the program name). Exit codes:
/// 0 ok, 2 validation, 3 non-convergence, 4 singularity/collision,
/// 5 verification failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace nbody

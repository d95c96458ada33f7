#pragma once

#include <string>
#include <vector>

namespace ibstress {

// Parses and executes one CLI invocation (args exclude the program name).
// Returns the process exit code: 0 ok, 2 usage, 3 I/O, 4 validation,
// 5 non-convergence.
int run_command(const std::vector<std::string>& args);

}  // namespace ibstress

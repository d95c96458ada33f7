#pragma once

#include <stdexcept>
#include <string>

namespace ibstress {

// Exit codes used by the CLI. Library exceptions map onto them in commands.cpp.
enum class ExitCode : int {
    ok = 0,
    failure = 1,
    usage = 2,
    io = 3,
    validation = 4,
    convergence = 5,
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ibstress

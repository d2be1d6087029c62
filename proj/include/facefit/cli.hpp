#pragma once

#include <string>
#include <vector>

namespace facefit {

/// Stable process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_input = 1,    // missing, unreadable, corrupt or inconsistent input; I/O failure
    exit_usage = 2,    // invalid arguments or missing required inputs
    exit_fit = 3,      // the computation could not be carried out (unconstrained, non-finite, saturated)
    exit_internal = 4, // unexpected failure
};

/// Runs one command line (args[0] is the program name). Diagnostics are a
/// single "facefit: error[<code>]: <message>" line on stderr.
int run_cli(const std::vector<std::string>& args);

int run_cli(int argc, char** argv);

} // namespace facefit

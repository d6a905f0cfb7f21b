#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "refer/clock.hpp"
#include "refer/http_backend.hpp"

namespace refer::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,          // I/O and other runtime errors
    kConfigError = 2,      // config, schema, dataset shape, id mismatch, usage
    kBackendExhausted = 3  // only with --fail-fast
};

struct Env {
    Clock& clock;
    std::ostream& out;
    std::ostream& err;
    EnvLookup env = process_env();
};

/// Runs one command line (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, Env& env);

}  // namespace refer::cli

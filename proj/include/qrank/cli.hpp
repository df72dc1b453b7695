#pragma once

#include <iosfwd>

namespace qrank::cli {

/// Exit statuses of `run`.
enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNoConvergence = 3 };

/// Runs one command line (argv[0] is the program name).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qrank::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace herdlv::cli {

/// Process exit codes. Stable across versions.
enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kUndetermined = 3,
  kNumericalFailure = 4,
  kRegimeViolation = 5,
};

/// Runs one command line (without the program name). Primary output goes to
/// `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "%.17g"-style formatting used for every number in CSV output.
std::string format_number(double value);

}  // namespace herdlv::cli

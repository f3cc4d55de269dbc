#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace treebounds::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInvalidModel = 2,
  kSizeCap = 3,
  kInvariantBreach = 4,
};

/// Runs one command line. `args` excludes the program name. Results go to
/// `out` unless --output is given; diagnostics always go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace treebounds::cli

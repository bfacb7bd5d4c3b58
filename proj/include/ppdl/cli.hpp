#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ppdl::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumerical = 3,
  kThresholdBreach = 4,
};

/// Runs one command. `args` excludes the program name, e.g. {"keygen", "--bits", "512"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ppdl::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fmargin::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kNumerical = 4,
};

/// Runs the fmtool command line. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fmargin::cli

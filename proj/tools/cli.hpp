#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace steinkd::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidationFailure = 1,
  kInputError = 2,
  kNumericError = 3,
};

/// Runs the command line. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace steinkd::cli

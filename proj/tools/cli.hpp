#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace convlab::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kValidation = 2,
  kNumerical = 3,
  kIo = 4,
};

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace convlab::cli

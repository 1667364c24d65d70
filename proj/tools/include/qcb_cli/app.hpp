#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qcb::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kNonconvergence = 3,
  kMismatch = 4,  ///< repro produced outputs whose hashes differ from the manifest
};

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qcb::cli

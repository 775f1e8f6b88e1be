#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vq::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2 };

/// Runs the `vq` command line. `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vq::cli

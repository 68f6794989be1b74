#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace postscan::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kInternalError = 3 };

/// Runs one `postscan` invocation. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace postscan::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kdecomp::cli {

/// Runs the command line `args` (args[0] is the program name). Exit codes:
/// 0 success, 1 domain or validation error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kdecomp::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace steinselect::cli {

/// Runs the command line `args` (program name excluded) and returns the exit
/// code: 0 success, 2 validation, 3 numerical, 4 iteration limit.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace steinselect::cli

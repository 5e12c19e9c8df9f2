#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tempgen::cli {

/// Runs one command line (args[0] is the program name) and returns the
/// process exit status: 0 success, 2 usage, 3 data, 4 numerical, 1 other.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tempgen::cli

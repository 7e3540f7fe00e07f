#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bfn::cli {

/// Runs the bfn command line with args (without the program name).
/// Returns the process exit code: 0 success, 1 failure (including a failed
/// verification), 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bfn::cli

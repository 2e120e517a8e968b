#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cemas::cli {

/// Entry point of the command-line tool; args excludes the program name.
/// Returns 0 on success, 1 when a solver fails or a verification does not
/// pass, 2 on invalid input or usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cemas::cli

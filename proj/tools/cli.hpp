#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace depthup::cli {

/// Runs the `depthup` command line. Returns the process exit status; messages go to
/// `out` and `err` rather than the process streams so tests can capture them.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace depthup::cli

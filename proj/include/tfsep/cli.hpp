#pragma once

#include <string>
#include <vector>

namespace tfsep::cli {

// Entry point shared by the binary and the tests; returns the process exit
// code (0 on success, nonzero with a one-line diagnostic on stderr).
int run(const std::vector<std::string>& args);

}  // namespace tfsep::cli

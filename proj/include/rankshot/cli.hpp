#pragma once

#include <string>
#include <vector>

namespace rankshot::cli {

// Runs one CLI invocation (args exclude the program name).
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical abort.
int run(const std::vector<std::string>& args);

}  // namespace rankshot::cli

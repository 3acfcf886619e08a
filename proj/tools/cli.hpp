#pragma once

#include <string>
#include <vector>

namespace sigfolio::cli {

// Runs one CLI invocation (args exclude the program name) and returns the
// process exit code: 0 ok, 2 config error, 3 data error, 4 solver/ruin
// error. Commands are pure functions of (config, input files): re-running
// with the same seed yields byte-identical outputs.
int run(const std::vector<std::string>& args);

}  // namespace sigfolio::cli

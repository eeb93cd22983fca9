#pragma once

#include <string>
#include <vector>

namespace topkima {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

// Runs one CLI invocation; args[0] is the program name. All outputs land in
// the --out directory; given the same config and seed the written bytes are
// identical across runs.
int run_cli(const std::vector<std::string>& args);

}  // namespace topkima

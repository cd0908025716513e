#pragma once

#include <string>
#include <vector>

namespace scoreflow {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 2 config error, 3 IO error, 4 numeric failure,
// 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

// Runs the scoreflow command line (args without argv[0]); in-process entry
// point so tests can drive commands directly.
int run_cli(const std::vector<std::string>& args);

}  // namespace scoreflow

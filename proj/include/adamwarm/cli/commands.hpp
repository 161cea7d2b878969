#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adamwarm::cli {

/// Exit codes: 0 success, 1 runtime or data error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "ADAMWARM_OUT_DIR";

/// Runs the tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace adamwarm::cli

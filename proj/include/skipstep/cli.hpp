#pragma once

#include <ostream>

namespace skipstep {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitIo = 3 };

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "SKIPSTEP_OUTPUT_DIR";

/// Entry point of the `skipstep` tool: train | sample | bench | ablate | verify.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skipstep

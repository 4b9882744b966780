#pragma once

#include <iosfwd>

namespace trires::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kSpec = 2,
  kSampling = 3,
  kEvaluation = 4,
  kVerification = 5,
  kIo = 6,
};

// Entry point of the `trires` tool: synth, tile, train, eval, heatmap and
// verify subcommands. Returns the exit code instead of exiting.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trires::cli

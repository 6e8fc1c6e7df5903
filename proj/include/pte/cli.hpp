#pragma once

namespace pte {

// Exit codes used by the command-line tool.
enum ExitCode {
  kExitOk = 0,
  kExitConfig = 2,      // bad usage, bad config, invalid input data
  kExitNumerical = 3,   // estimation failed numerically
  kExitUnreliable = 4,  // bootstrap could not produce reliable intervals
};

int run_cli(int argc, char** argv);

}  // namespace pte

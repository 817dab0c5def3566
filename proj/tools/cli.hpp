#pragma once

#include <iosfwd>

namespace hrigame {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitSolver = 3,
  kExitIo = 4,
};

/// Entry point of the `hrigame` command: gains, simulate, sweep, serve.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hrigame

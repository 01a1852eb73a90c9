#pragma once

#include <ostream>

namespace pilotstack::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitRuntime = 1,
    kExitConfig = 2,
};

/// Entry point of the `pilotstack` executable. Subcommands: drive, autopilot,
/// train, eval-lap, analyze, replay, make-track, generate.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Asks a running drive/autopilot/replay session to stop (what SIGINT does).
void request_stop();

}  // namespace pilotstack::cli

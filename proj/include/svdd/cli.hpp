#pragma once

namespace svdd {

// Full command-line driver (subcommands: clean, eval, refilter, synth,
// oracle).  Returns the process exit code: 0 success, 2 configuration
// errors, 3 data/transport/protocol errors, 4 training/numeric failures.
int run_cli(int argc, char** argv);

}  // namespace svdd

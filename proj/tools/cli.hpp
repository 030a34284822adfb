#pragma once

// Command-line front end:
//   microgrid <generate|train|assess|bench> --config PATH [--seed N] [--threads N] [--out DIR]

namespace microgrid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  ///< bad configuration or input data
inline constexpr int kExitFile = 2;     ///< missing or unreadable file

/// Parses the arguments and runs one subcommand; returns the exit code.
int run(int argc, const char* const* argv);

}  // namespace microgrid::cli

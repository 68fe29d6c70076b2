#pragma once

#include <iosfwd>

namespace mwlab {

// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitHardFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Runs one subcommand; reports go to `out`, structured errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mwlab

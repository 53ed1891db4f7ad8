#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eigenrank {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Subcommands: dice, matrix, select, rank, simulate, synth-gen, eval,
/// compare. Runtime failures print one line "error: <code>: <message>" to
/// `err`; usage errors print the parser message and exit 2.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_dispatch(int argc, char** argv);

}  // namespace eigenrank

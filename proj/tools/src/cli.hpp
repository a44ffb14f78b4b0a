#pragma once

// Entry point of the uafkit command-line tool, separated from main() so the
// whole front end can be driven in-process by tests.

#include <ostream>
#include <string>
#include <vector>

namespace uafkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name. Regular output goes to `out` unless a
/// subcommand writes a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uafkit::cli

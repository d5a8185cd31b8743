#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace medharness::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2, kPartial = 3 };

/// Parses `args` (without the program name) and runs the subcommand.
/// Human-readable results go to `out`, usage errors to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace medharness::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pips {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

// Entry point of the `pips` binary; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pips

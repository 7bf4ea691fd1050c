#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dbevo {

// Exit codes of the command line driver.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,       // usage, parse errors, invalid operators or decision logs
  kExitUndecided = 3,   // pending references or unresolved human decisions
  kExitContradiction = 4,
  kExitCycle = 5,
};

// Runs `dbevo <args...>` (program name excluded) with the given streams.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbevo

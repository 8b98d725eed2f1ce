#pragma once

#include <string>
#include <vector>

namespace ctmg {

// Command line entry point; args excludes the program name. Subcommands:
// run, study, probe, validate-config. Exit codes: 0 success, 1 solver
// failure, 2 invalid configuration or usage.
int cli_main(const std::vector<std::string>& args);

}  // namespace ctmg

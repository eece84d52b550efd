#pragma once

// In-process command-line entry point. Subcommands: decompose, build, verify,
// simulate, tail, density, dynkin, figure1. Exit codes: 0 success, 1
// verification violation or runtime failure, 2 usage error.

#include <string>
#include <vector>

namespace stabilyze {

// args = argv[1..]; writes artifacts under --out (default ".")
int cli_run(const std::vector<std::string>& args);

}  // namespace stabilyze

#pragma once

namespace marlbench::cli {

// Entry point for the command-line tool. Exit codes: 0 success, 1
// configuration error, 2 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace marlbench::cli

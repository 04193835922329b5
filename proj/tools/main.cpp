#include "marlbench/cli/cli.hpp"

int main(int argc, char** argv) { return marlbench::cli::run_cli(argc, argv); }

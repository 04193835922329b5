#pragma once

#include <stdexcept>
#include <string>

namespace marlbench {

// Raised for invalid configuration, bad CLI input, rejected overrides and
// checkpoint header problems. Maps to exit code 1 in the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a training run fails after setup (non-finite loss, IO failure
// mid-run). Maps to exit code 2 in the CLI.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace marlbench

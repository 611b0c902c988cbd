#pragma once

#include <stdexcept>
#include <string>

namespace kmslab {

// Exit codes used by the CLI driver.
enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 2,
  exit_invariant_violation = 3,
  exit_check_failure = 4,
  exit_internal = 5,
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvariantError : std::runtime_error {
  explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kmslab

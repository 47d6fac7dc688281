#pragma once

#include <stdexcept>
#include <string>

namespace coverage {

/// Raised when a computation cannot proceed (bad model parameters, degenerate
/// inputs, malformed data). The CLI maps it to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration. The CLI maps it to exit status 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace coverage

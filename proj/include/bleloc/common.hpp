#pragma once

#include <stdexcept>
#include <string>

namespace bleloc {

/// Malformed or inconsistent input data (bad CSV row, unknown beacon id, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration (bad scenario file, missing required field, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-convergence, singular system, degenerate fit).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bleloc

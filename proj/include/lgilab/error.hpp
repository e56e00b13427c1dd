#pragma once

#include <stdexcept>
#include <string>

namespace lgilab {

// Base class for every error raised by the library. The CLI maps each
// subclass onto a distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or schema-violating configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite or exploding iterates (exit code 3).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Violated operation precondition: shape mismatch, out-of-range
// parameter, degenerate input (exit code 4).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace lgilab

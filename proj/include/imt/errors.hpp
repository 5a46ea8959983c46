#pragma once

#include <stdexcept>
#include <string>

namespace imt {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file (MDP, layout, policy, config).
struct ParseError : Error {
  using Error::Error;
};

/// Structural misuse of a model: restricting a disabled action, policy
/// conflicts, missing features, invalid state indices.
struct ModelError : Error {
  using Error::Error;
};

/// Failure of a policy adapter (process died, protocol violation, timeout).
struct AdapterError : Error {
  using Error::Error;
};

/// Value iteration did not reach the requested residual.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

/// Inconsistent or incomplete run configuration.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace imt

#pragma once

#include <stdexcept>
#include <string>

namespace pfsim {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a potential, or a field violating positivity.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed or out-of-range configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Iterative solver (CG or Newton) did not converge.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Adaptive stepping hit the minimum step size.
class FatalSolverError : public Error {
public:
  FatalSolverError(const std::string& what, long failing_step)
      : Error(what), step_(failing_step) {}
  long failing_step() const noexcept { return step_; }

private:
  long step_;
};

/// Internal-energy mass below the admissibility bound of the stationary problem.
class AdmissibilityError : public Error {
public:
  using Error::Error;
};

/// No sign change of the mass gap found in the temperature bracket.
class BracketError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace pfsim

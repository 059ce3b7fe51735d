#pragma once

#include <stdexcept>
#include <string>

namespace homspray {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, unknown preset name, bad shapes.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A configuration the formulas do not cover (non-reductive Finsler source,
/// Cartan tensor requested for a direct spray, ...).
class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-PD tensor, step shrink exhausted, ODE leaving the
/// slit cone, series cap hit.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class StrongConvexityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConeExitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ChartRadiusError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateFlagError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Scene file problems; `where` names the offending JSON field.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace homspray

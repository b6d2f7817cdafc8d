#pragma once

#include <stdexcept>
#include <string>

namespace hetprior {

/// Root of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input (bad CSV header, unparsable prior text, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

/// A single bad record; carries the 1-based line number in the source file.
class RecordError : public InputError {
 public:
  RecordError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-convergence, infeasible matching problem, grid failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A moment-matching problem without a solution in the requested family.
class InfeasibleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InitializationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GridError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hetprior

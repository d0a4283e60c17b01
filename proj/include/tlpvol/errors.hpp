#pragma once

#include <stdexcept>
#include <string>

namespace tlpvol {

// Maps one-to-one onto the CLI exit codes (1, 2, 3).
enum class ErrorKind { usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad parameters: out-of-range values, unknown names, invalid specs.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Numerical failure: singular systems, non-convergence, non-finite state.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Raised when too few observations carry kernel weight for the requested fit.
class InsufficientDataError : public NumericalError {
 public:
  explicit InsufficientDataError(const std::string& detail)
      : NumericalError("insufficient local data: " + detail) {}
};

}  // namespace tlpvol

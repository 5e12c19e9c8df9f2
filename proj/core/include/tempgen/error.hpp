#pragma once

#include <stdexcept>
#include <string>

namespace tempgen {

/// Base class for every error raised by the library. `exit_code()` is the
/// process status the CLI maps it to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Malformed, inconsistent, or out-of-range input data.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// File-system failures (unreadable, unwritable, truncated files).
class IoError : public DataError {
 public:
  using DataError::DataError;
};

/// Tensor shape incompatibilities.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or divergence during training.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace tempgen

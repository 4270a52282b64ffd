#pragma once

#include <stdexcept>
#include <string>

namespace anovakrr {

// Base for every error the library raises. exit_code() is what the CLI
// returns when the error escapes a command.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

// File missing, unreadable or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// Bad shapes, out-of-range parameters, malformed input data.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// NaN/Inf in a recurrence, singular systems, conditioning failures.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace anovakrr

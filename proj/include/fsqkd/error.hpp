#pragma once

#include <stdexcept>
#include <string>

namespace fsqkd {

/// Base class for all simulator errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter or malformed input (CLI exit code 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Scenario file syntax or schema problem; message carries the line number.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Requested operating point cannot produce key (zero gain, empty bounds).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsqkd

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace agentpanel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented contract (schema, bounds, uniqueness).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A bounded quantity fell outside its range.
class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Text could not be parsed into the expected structure.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A live or scripted backend failed to produce a usable answer.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace agentpanel

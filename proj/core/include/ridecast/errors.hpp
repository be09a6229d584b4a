#pragma once

#include <stdexcept>
#include <string>

namespace ridecast {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: out-of-range values, dimension mismatches, empty data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A required column or field is absent, or a header does not match.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A structured document (model, config, report) could not be parsed.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A referenced input file does not exist or cannot be opened.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

/// A stream failed mid-read or mid-write.
class IoError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was violated (corrupt model, impossible state).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ridecast

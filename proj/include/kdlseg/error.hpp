#pragma once

#include <stdexcept>
#include <string>

namespace kdlseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File contents do not match the expected layout (bad magic, truncation, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Inputs disagree on shape.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Floating-point state that should be impossible, e.g. a clearly negative squared error.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace kdlseg

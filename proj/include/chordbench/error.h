#pragma once

#include <stdexcept>
#include <string>

namespace chordbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input: chord labels, annotation rows, config entries.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// File system failures (missing files, short reads, unwritable paths).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during training or fitting.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace chordbench

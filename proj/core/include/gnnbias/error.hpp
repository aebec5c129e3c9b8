#pragma once

#include <stdexcept>
#include <string>

namespace gnnbias {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A stochastic construction ran out of its retry budget.
class SynthesisFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. The message carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gnnbias

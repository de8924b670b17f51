#pragma once

#include <stdexcept>
#include <string>

namespace recomb {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad sizes, out-of-range symbols, invalid configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition does not hold (e.g. a step too large for a kernel).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a functional (e.g. log of zero).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: NaN/Inf, unstable integration, singular solves.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace recomb

#pragma once

#include <stdexcept>
#include <string>

namespace madirl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation's signature.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An API was called in the wrong state (e.g. backward on a stale tape).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is outside its documented range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file is corrupt, truncated or has an unknown format version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Data was produced for a different game than the one requested.
class SpecMismatchError : public Error {
 public:
  using Error::Error;
};

/// A statistic is undefined for the data given (zero denominator or variance).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace madirl

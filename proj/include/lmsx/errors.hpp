#pragma once

#include <stdexcept>
#include <string>

namespace lmsx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A vector whose norm appears in a denominator is (numerically) zero.
class ZeroNormError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradientError : public Error {
 public:
  using Error::Error;
};

class NonFiniteFunctionError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public Error {
 public:
  using Error::Error;
};

class TruncatedPayloadError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class EmptySplitError : public Error {
 public:
  using Error::Error;
};

class EmptyEvalSetError : public Error {
 public:
  using Error::Error;
};

class ChecksumMismatchError : public Error {
 public:
  using Error::Error;
};

class NetworkFailureError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmsx

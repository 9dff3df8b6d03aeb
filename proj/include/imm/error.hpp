#pragma once

#include <stdexcept>
#include <string>

namespace imm {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not line up for the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain (empty input, k = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// NaN (or otherwise invalid) value seen on input.
class InvalidValueError : public Error {
 public:
  using Error::Error;
};

/// Hyper-parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Misuse of the autodiff machinery or optimizer bookkeeping.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Lookup of an unknown key (subject id, tensor name, ...).
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced during a forward pass or training step.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data, or an IO failure.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace imm

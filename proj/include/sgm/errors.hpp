#pragma once

#include <stdexcept>
#include <string>

namespace sgm {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameter or option value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API called in the wrong order or with handles it does not own.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (files, labels, vocabularies).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or probabilities that make the computation meaningless.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgm

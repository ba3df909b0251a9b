#pragma once

#include <stdexcept>
#include <string>

namespace gzsl {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or vector dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters, topology or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; the message carries file and line when known.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well formed but lacks required columns or fields.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf reached an operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gzsl

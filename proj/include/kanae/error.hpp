#pragma once

#include <stdexcept>
#include <string>

namespace kanae {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or widths that do not line up.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Invalid construction parameters or configuration values.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// NaN or Inf produced where finite values are required.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Calls made in the wrong order (e.g. backward before forward).
class StateError : public Error {
public:
  using Error::Error;
};

/// Malformed input text.
class ParseError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace kanae

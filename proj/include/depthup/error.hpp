#pragma once

#include <stdexcept>
#include <string>

namespace depthup {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid shapes that do not agree, or are empty.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raw sample values outside their declared range, or not finite.
class InputRangeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid solver or benchmark configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, parsed or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace depthup

#pragma once

#include <stdexcept>
#include <string>

namespace cdpauth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on caller-supplied values was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Tensor or image dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf reached a layer boundary.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed file, manifest, config or checkpoint.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdpauth

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace adf {

/// Base class of every error raised by the library. Each error records the
/// name of the operation that raised it.
class Error : public std::runtime_error {
 public:
  Error(std::string operation, const std::string& what)
      : std::runtime_error(operation + ": " + what), operation_(std::move(operation)) {}

  const std::string& operation() const noexcept { return operation_; }

 private:
  std::string operation_;
};

/// Argument, seed or output has the wrong kind or length.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Backend registration or composition is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value was produced or supplied, or a linear system is singular.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An object was used outside of its valid lifetime (e.g. an invalidated tape).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace adf

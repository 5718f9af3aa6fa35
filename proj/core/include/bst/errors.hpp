#pragma once

#include <stdexcept>
#include <string>

namespace bst {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Coincident or otherwise degenerate points in a geometric kernel.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Conforming-dimension violations between operators, vectors and grids.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or unreadable files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite input is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace bst

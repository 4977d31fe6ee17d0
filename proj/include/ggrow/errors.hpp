#pragma once

#include <stdexcept>

namespace ggrow {

// Base type for all library failures; subtypes distinguish configuration,
// numerical, and I/O causes so callers can map them to distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands whose dimensions or index ranges do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A Cholesky factorisation failed; the matrix is not numerically PD.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

// Singular or indefinite working blocks, non-positive diagonals, empty
// candidate sets: states the algorithms cannot make progress from.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Support-structure violations (duplicate or out-of-support edges).
class SupportError : public Error {
 public:
  using Error::Error;
};

// Invalid options, config documents, or parameter combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File-system and parse failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ggrow

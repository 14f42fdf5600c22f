#pragma once

#include <stdexcept>
#include <string>

namespace bayesic {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file: missing column, unparsable header, wrong format.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A row or value violates a data invariant (e.g. non-positive duration).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration: unknown key, out-of-range hyperparameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shape or dimension mismatch between tensors/models.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss) or a numeric invariant broke.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bayesic

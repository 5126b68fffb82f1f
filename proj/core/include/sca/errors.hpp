#pragma once

#include <stdexcept>
#include <string>

namespace sca {

/// Shape disagreement between inputs (row/column/length mismatch).
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// An operation received an empty set where at least one element is required.
class EmptyInputError : public std::invalid_argument {
 public:
  explicit EmptyInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A scalar argument is outside its documented range.
class RangeError : public std::invalid_argument {
 public:
  explicit RangeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Not enough rows/classes to carry out a statistical fit.
class InsufficientDataError : public std::invalid_argument {
 public:
  explicit InsufficientDataError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid or inconsistent configuration, detected before any compute.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// File I/O failure; message carries the path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sca

#pragma once

#include <stdexcept>
#include <string>

namespace rfbias {

/// Parameter or configuration value violates a documented invariant.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Input data cannot be used (missing file, missing column, empty result, schema mismatch).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace rfbias

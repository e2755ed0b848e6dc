#pragma once

#include <stdexcept>
#include <string>

namespace kfp {

/// Error categories double as CLI exit codes.
enum class ErrorCategory : int {
  parse = 2,
  domain = 3,
  precision = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorCategory::parse, what) {}
};

/// Inputs outside the valid parameter domain (poles on the unit circle,
/// cancelling pole/root pairs, non-positive prior values, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::domain, what) {}
};

/// Degenerate or non positive-definite metric.
class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error(ErrorCategory::domain, what) {}
};

/// Misconfigured ansatz or experiment (u* below the bound, bad weights, ...).
class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what) : Error(ErrorCategory::domain, what) {}
};

/// Truncation cap reached or requested accuracy not attainable.
class PrecisionError : public Error {
 public:
  explicit PrecisionError(const std::string& what) : Error(ErrorCategory::precision, what) {}
};

/// Two computational routes that must agree did not.
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error(ErrorCategory::internal, what) {}
};

}  // namespace kfp

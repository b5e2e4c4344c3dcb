#pragma once

#include <stdexcept>
#include <string>

namespace pips {

// Base for every error the engine raises on purpose. Anything else escaping a
// module is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnparseableAnswer : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Provider failures.
class ProviderError : public Error {
 public:
  using Error::Error;
};
class RateLimited : public ProviderError {
 public:
  using ProviderError::ProviderError;
};
class Timeout : public ProviderError {
 public:
  using ProviderError::ProviderError;
};
class AuthFailure : public ProviderError {
 public:
  using ProviderError::ProviderError;
};
class ReplayMiss : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class MissingBlock : public Error {
 public:
  using Error::Error;
};

class UnclassifiedInstance : public Error {
 public:
  using Error::Error;
};

}  // namespace pips

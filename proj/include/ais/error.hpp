#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ais {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model or configuration text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A model or problem that violates one of its structural invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  ValidationError(const std::string& message);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Enumeration refused because the free state space exceeds the cap.
class StateSpaceError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's domain (bad sizes, zero denominators, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace ais

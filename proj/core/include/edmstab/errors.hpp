#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace edmstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold, so its
/// postcondition cannot be guaranteed.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRule : public Error {
 public:
  using Error::Error;
};

/// Model parameters produce an inconsistent result (e.g. no real endemic
/// equilibrium).
class ModelInconsistency : public Error {
 public:
  using Error::Error;
};

/// A state lies outside the domain on which a function is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// File output failed; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected at load time. Carries the offending keys.
class ValidationError : public Error {
 public:
  ValidationError(std::vector<std::string> keys, const std::string& message)
      : Error(message), keys_(std::move(keys)) {}

  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

}  // namespace edmstab

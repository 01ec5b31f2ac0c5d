#pragma once

#include <stdexcept>
#include <string>

namespace sdcd {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when a constraint is evaluated outside its domain of definition
/// (h_log / h_inv with spectral radius >= 1). Carries the sign of det(I - A).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, int det_sign) : Error(what), det_sign_(det_sign) {}
  int det_sign() const noexcept { return det_sign_; }

 private:
  int det_sign_;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents or inconsistent inputs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdcd

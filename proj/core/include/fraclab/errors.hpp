#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied data was violated (bad sizes, out-of-range parameters).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An oscillating kernel is too fine for the grid it is assembled on.
class AliasingError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The kernel handed to a solve does not respect its declared bounds or symmetry.
class IllPosed : public Error {
 public:
  using Error::Error;
};

/// No pair of the effective-kernel table survived the denominator floor.
class EmptyMask : public Error {
 public:
  using Error::Error;
};

}  // namespace fraclab

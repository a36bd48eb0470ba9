#pragma once

#include <stdexcept>
#include <string>

namespace mrf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct BadMagicError : FormatError {
  using FormatError::FormatError;
};

struct BadVersionError : FormatError {
  using FormatError::FormatError;
};

struct TruncatedError : FormatError {
  using FormatError::FormatError;
};

struct DimensionError : Error {
  using Error::Error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

}  // namespace mrf

#pragma once

#include <stdexcept>
#include <string>

namespace ecan {

// Base class for all library errors. CLI maps NumericError (and subclasses)
// to exit code 3, everything else to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IndexError : Error {
  using Error::Error;
};

// Malformed file contents; message carries a byte offset or line number.
struct FormatError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

// Row with (near-)zero norm fed to a normalization.
struct DegenerateFeatureError : NumericError {
  using NumericError::NumericError;
};

struct UsageError : Error {
  using Error::Error;
};

}  // namespace ecan

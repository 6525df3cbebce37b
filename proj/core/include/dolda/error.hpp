#pragma once

#include <stdexcept>
#include <string>

namespace dolda {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed config, inconsistent corpus, invalid argument.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not complete (e.g. a non-SPD precision matrix).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dolda

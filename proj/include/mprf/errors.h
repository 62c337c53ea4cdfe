#ifndef MPRF_ERRORS_H_
#define MPRF_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mprf {

// Root of every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters: bad (t, n), mismatched sharings, malformed configs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mathematical domain violations: inverse of zero, sqrt of a negative, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

// A fixed-point value left the representable range.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class InsufficientShares : public Error {
 public:
  using Error::Error;
};

// Shares that do not lie on one polynomial, or a failed bit check.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// The inverse-CDF solver could not bracket its target.
class BracketError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mprf

#endif  // MPRF_ERRORS_H_

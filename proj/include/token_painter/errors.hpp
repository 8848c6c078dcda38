#pragma once

#include <stdexcept>
#include <string>

namespace tp {

// Every failure raised by the library derives from Error so callers can map
// categories onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not line up (non-divisible image sizes, wrong token width).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Unreadable or malformed files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace tp

#pragma once

#include <stdexcept>
#include <string>

namespace smdt {

/// Base of every error raised by the library. The CLI maps ConfigError to
/// exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (network file, scenario, sizes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A link with non-positive length reached a formula that divides by it.
class InvalidLinkError : public Error {
 public:
  using Error::Error;
};

/// Route requested with start == end.
class DegenerateRequestError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (e.g. observation outside coverage).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// KPI report requested over an empty sample set.
class ReportError : public Error {
 public:
  using Error::Error;
};

}  // namespace smdt

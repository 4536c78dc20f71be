#pragma once

#include <stdexcept>
#include <string>

namespace heavysum {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. N < 3).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// A configured size or work budget would be exceeded.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

/// Combinatorial search budget exceeded (J1 with too many jumps).
class BudgetExceeded : public ResourceLimit {
 public:
  using ResourceLimit::ResourceLimit;
};

/// Too few expected events for a meaningful statistical estimate.
class InsufficientStatistics : public Error {
 public:
  using Error::Error;
};

class QuadratureNonconvergence : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class FitUnstable : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace heavysum

#pragma once

#include <stdexcept>
#include <string>

namespace dirinfo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of the supplied matrices do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A mathematical precondition of an operation does not hold. The message
/// names the failed test, e.g. "detectability test failed for (G,C)".
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver did not reach its tolerance within its budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The water-filling supremum is +infinity.
class UnboundedError : public Error {
 public:
  using Error::Error;
};

/// The power budget cannot be met by any admissible strategy.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double minimum_cost)
      : Error(what), minimum_cost_(minimum_cost) {}

  double minimum_cost() const { return minimum_cost_; }

 private:
  double minimum_cost_;
};

}  // namespace dirinfo

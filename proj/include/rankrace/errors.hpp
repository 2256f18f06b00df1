#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankrace {

enum class ErrorKind {
  InvalidPiecewise,
  NonFiniteIntegrand,
  NotDecreasing,
  Negative,
  NotLeftContinuousAtOne,
  InvalidCost,
  InvalidParameter,
  InvalidGrid,
  CostAssumptionViolated,
  InfeasibleChallenger,
  AbsorbedBeforeTarget,
  QuadratureFailure,
};

std::string_view to_string(ErrorKind kind);

/// True for errors caused by inputs that fail a precondition, as opposed to
/// a numerical routine that could not deliver its result.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rankrace

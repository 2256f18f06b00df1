#include "rankrace/errors.hpp"

namespace rankrace {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidPiecewise: return "InvalidPiecewise";
    case ErrorKind::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorKind::NotDecreasing: return "NotDecreasing";
    case ErrorKind::Negative: return "Negative";
    case ErrorKind::NotLeftContinuousAtOne: return "NotLeftContinuousAtOne";
    case ErrorKind::InvalidCost: return "InvalidCost";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::CostAssumptionViolated: return "CostAssumptionViolated";
    case ErrorKind::InfeasibleChallenger: return "InfeasibleChallenger";
    case ErrorKind::AbsorbedBeforeTarget: return "AbsorbedBeforeTarget";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteIntegrand:
    case ErrorKind::QuadratureFailure:
      return false;
    default:
      return true;
  }
}

}  // namespace rankrace

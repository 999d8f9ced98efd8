#include "starlab/error.hpp"

namespace starlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoFirstZero: return "NoFirstZero";
    case ErrorCode::NonPhysicalVacuum: return "NonPhysicalVacuum";
    case ErrorCode::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ZerosDoNotCoincide: return "ZerosDoNotCoincide";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::CollapseReached: return "CollapseReached";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::WrongClassification: return "WrongClassification";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::JacobianDegenerate: return "JacobianDegenerate";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::CFLFloor: return "CFLFloor";
    case ErrorCode::DegenerateWeight: return "DegenerateWeight";
    case ErrorCode::TemperatureNegative: return "TemperatureNegative";
    case ErrorCode::MissingDerivative: return "MissingDerivative";
    case ErrorCode::WeightViolation: return "WeightViolation";
    case ErrorCode::KEqualsOne: return "KEqualsOne";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace starlab

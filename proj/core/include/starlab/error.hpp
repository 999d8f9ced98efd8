#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace starlab {

enum class ErrorCode {
  NoFirstZero,
  NonPhysicalVacuum,
  ToleranceNotMet,
  OutOfRange,
  ZerosDoNotCoincide,
  InvalidParams,
  CollapseReached,
  StepFailure,
  WrongClassification,
  DomainViolation,
  JacobianDegenerate,
  NewtonDivergence,
  CFLFloor,
  DegenerateWeight,
  TemperatureNegative,
  MissingDerivative,
  WeightViolation,
  KEqualsOne,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace starlab

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqpulse {

enum class ErrorCode {
  NonMonotonicSpectrum,
  GapStructureViolation,
  IndexOutOfRange,
  NonPositiveField,
  NegativeDuration,
  EigenFailure,
  NotNormalized,
  DimensionMismatch,
  InvalidSchedule,
  InfeasibleMagnitudes,
  SingularPhaseSystem,
  WindingBoundExceeded,
  FidelityBelowFloor,
  NotSkewHermitian,
  MaxIterExceeded,
  WitnessMismatch,
  InvalidInput,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::NonMonotonicSpectrum: return "NonMonotonicSpectrum";
  case ErrorCode::GapStructureViolation: return "GapStructureViolation";
  case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
  case ErrorCode::NonPositiveField: return "NonPositiveField";
  case ErrorCode::NegativeDuration: return "NegativeDuration";
  case ErrorCode::EigenFailure: return "EigenFailure";
  case ErrorCode::NotNormalized: return "NotNormalized";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::InvalidSchedule: return "InvalidSchedule";
  case ErrorCode::InfeasibleMagnitudes: return "InfeasibleMagnitudes";
  case ErrorCode::SingularPhaseSystem: return "SingularPhaseSystem";
  case ErrorCode::WindingBoundExceeded: return "WindingBoundExceeded";
  case ErrorCode::FidelityBelowFloor: return "FidelityBelowFloor";
  case ErrorCode::NotSkewHermitian: return "NotSkewHermitian";
  case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
  case ErrorCode::WitnessMismatch: return "WitnessMismatch";
  case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

/// Library-wide exception. `code()` identifies the failure class so callers
/// (and the CLI exit-code mapping) never have to parse messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace sqpulse

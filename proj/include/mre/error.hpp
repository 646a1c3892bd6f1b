#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mre {

enum class ErrorCode {
  NonAlignedInterface,
  GridMismatch,
  MalformedHeader,
  RowCountMismatch,
  Io,
  NotInAdmissibleSet,
  SingularSystem,
  SolverDivergence,
  ZeroModulus,
  DegenerateTransmission,
  DimensionMismatch,
  BracketFailure,
  DegenerateResidual,
  NonFiniteStep,
  InitialOutsideAdmissibleSet,
  BallEscapesAdmissibleSet,
  NonGridColumn,
  LayoutMismatch,
  InvalidConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonAlignedInterface: return "NonAlignedInterface";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NotInAdmissibleSet: return "NotInAdmissibleSet";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::ZeroModulus: return "ZeroModulus";
    case ErrorCode::DegenerateTransmission: return "DegenerateTransmission";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::DegenerateResidual: return "DegenerateResidual";
    case ErrorCode::NonFiniteStep: return "NonFiniteStep";
    case ErrorCode::InitialOutsideAdmissibleSet: return "InitialOutsideAdmissibleSet";
    case ErrorCode::BallEscapesAdmissibleSet: return "BallEscapesAdmissibleSet";
    case ErrorCode::NonGridColumn: return "NonGridColumn";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mre

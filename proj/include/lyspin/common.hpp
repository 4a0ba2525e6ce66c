#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lyspin {

using cplx = std::complex<double>;

/// Lattice coordinates of a site.
using Point = std::vector<int>;

enum class ErrorCode {
  InvalidArgument,
  SymmetryViolation,
  FerromagnetismViolation,
  RangeViolation,
  UnsupportedDimension,
  ConfigMismatch,
  ZeroNormalizer,
  ZeroPartition,
  BudgetExceeded,
  MissingMoment,
  NotAChain,
  NotIsingType,
  RootFindingFailure,
  DenominatorZero,
  NoWedgeFound,
  GraphBudgetExceeded,
  NotFound,
  NotInConvergenceRegion,
  OutsideHalfPlane,
  SampleTooCoarse,
  InsufficientData,
  NonDecay,
  ConfigParse,
  IoFailure,
  CheckFailure,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SymmetryViolation: return "SymmetryViolation";
    case ErrorCode::FerromagnetismViolation: return "FerromagnetismViolation";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::ZeroNormalizer: return "ZeroNormalizer";
    case ErrorCode::ZeroPartition: return "ZeroPartition";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::MissingMoment: return "MissingMoment";
    case ErrorCode::NotAChain: return "NotAChain";
    case ErrorCode::NotIsingType: return "NotIsingType";
    case ErrorCode::RootFindingFailure: return "RootFindingFailure";
    case ErrorCode::DenominatorZero: return "DenominatorZero";
    case ErrorCode::NoWedgeFound: return "NoWedgeFound";
    case ErrorCode::GraphBudgetExceeded: return "GraphBudgetExceeded";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotInConvergenceRegion: return "NotInConvergenceRegion";
    case ErrorCode::OutsideHalfPlane: return "OutsideHalfPlane";
    case ErrorCode::SampleTooCoarse: return "SampleTooCoarse";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonDecay: return "NonDecay";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CheckFailure: return "CheckFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// driver can map it to an exit status and a machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace lyspin

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dte {

enum class ErrorCode {
  EmptyArm,
  NonFiniteValue,
  UnsortedGrid,
  ShapeMismatch,
  NonFiniteGradient,
  InvalidArgument,
  SingularDesign,
  TooFewUnits,
  EmptyTrainingArm,
  SameArm,
  GridTooSmall,
  DuplicateLocation,
  DegenerateDraws,
  ZeroBaselineSE,
  MissingColumn,
  ParseError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyArm: return "EmptyArm";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::UnsortedGrid: return "UnsortedGrid";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::TooFewUnits: return "TooFewUnits";
    case ErrorCode::EmptyTrainingArm: return "EmptyTrainingArm";
    case ErrorCode::SameArm: return "SameArm";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::DuplicateLocation: return "DuplicateLocation";
    case ErrorCode::DegenerateDraws: return "DegenerateDraws";
    case ErrorCode::ZeroBaselineSE: return "ZeroBaselineSE";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every domain failure carries a code and a module-qualified message,
// e.g. "[estimation] TooFewUnits: n=3 < L=4".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string_view module, const std::string& detail)
      : std::runtime_error("[" + std::string(module) + "] " +
                           std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dte

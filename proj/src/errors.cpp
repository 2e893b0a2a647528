#include "hasod/errors.hpp"

namespace hasod {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::KTooSmall: return "KTooSmall";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::TooManyFactors: return "TooManyFactors";
    case ErrorCode::ResolutionUnattainable: return "ResolutionUnattainable";
    case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ResampleLimit: return "ResampleLimit";
    case ErrorCode::FitFailure: return "FitFailure";
    case ErrorCode::MeanQueryOnVarianceOnlyModel: return "MeanQueryOnVarianceOnlyModel";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::NotComplete: return "NotComplete";
    case ErrorCode::UnknownRowId: return "UnknownRowId";
    case ErrorCode::DuplicateResponse: return "DuplicateResponse";
    case ErrorCode::NonFiniteResponse: return "NonFiniteResponse";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::InsufficientReplications: return "InsufficientReplications";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownSession: return "UnknownSession";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

}  // namespace hasod

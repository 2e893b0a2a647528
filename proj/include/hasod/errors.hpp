#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hasod {

// Domain error names surface verbatim on the CLI and in HTTP error bodies.
enum class ErrorCode {
  NonFinite,
  Degenerate,
  SolveFailure,
  KTooSmall,
  KTooLarge,
  TooManyFactors,
  ResolutionUnattainable,
  DimensionUnsupported,
  InvalidArgument,
  ResampleLimit,
  FitFailure,
  MeanQueryOnVarianceOnlyModel,
  SessionComplete,
  NotComplete,
  UnknownRowId,
  DuplicateResponse,
  NonFiniteResponse,
  InvalidConfig,
  UnknownScenario,
  UnknownMethod,
  InsufficientReplications,
  MalformedInput,
  IoError,
  UnknownSession,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace hasod

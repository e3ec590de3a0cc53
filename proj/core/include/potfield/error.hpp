#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace potfield {

enum class ErrorCode {
  // input / data problems
  MissingColumn,
  UnparsableRow,
  NonMonotoneTimestamps,
  InsufficientOverlap,
  DegenerateRange,
  TooShort,
  NoPairs,
  NonUniformSampling,
  UnknownAsset,
  InvalidArgument,
  UnstableStep,
  Io,
  // numerical failures
  SingularKernel,
  NonFinite,
  NoAttractorMass,
  NonPositiveVariance,
  DegenerateSpectrum,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for codes that signal a numerical failure rather than bad input.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace potfield

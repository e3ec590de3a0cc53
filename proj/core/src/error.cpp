#include "potfield/error.hpp"

namespace potfield {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparsableRow: return "UnparsableRow";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::NonUniformSampling: return "NonUniformSampling";
    case ErrorCode::UnknownAsset: return "UnknownAsset";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::Io: return "Io";
    case ErrorCode::SingularKernel: return "SingularKernel";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NoAttractorMass: return "NoAttractorMass";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SingularKernel:
    case ErrorCode::NonFinite:
    case ErrorCode::NoAttractorMass:
    case ErrorCode::NonPositiveVariance:
    case ErrorCode::DegenerateSpectrum:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace potfield

#include "siws/error.hpp"

namespace siws {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::RegimeViolation: return "RegimeViolation";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::ClampExceeded: return "ClampExceeded";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::MetzlerViolation: return "MetzlerViolation";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::CertificateNotFound: return "CertificateNotFound";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::WrongRegime: return "WrongRegime";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::ClosedFormMismatch: return "ClosedFormMismatch";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_hypothesis_violation(ErrorCode code) {
  switch (code) {
    case ErrorCode::RegimeViolation:
    case ErrorCode::HypothesisViolated:
    case ErrorCode::NotIrreducible:
    case ErrorCode::WrongRegime:
    case ErrorCode::PreconditionViolated:
    case ErrorCode::MetzlerViolation:
      return true;
    default:
      return false;
  }
}

}  // namespace siws

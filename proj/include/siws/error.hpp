#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace siws {

enum class ErrorCode {
  DimensionMismatch,
  NegativeEntry,
  RegimeViolation,
  StepSizeUnderflow,
  ClampExceeded,
  EigenFailure,
  MetzlerViolation,
  HypothesisViolated,
  CertificateNotFound,
  NotIrreducible,
  WrongRegime,
  BracketFailure,
  NoConvergence,
  NegativeInput,
  ClosedFormMismatch,
  PreconditionViolated,
  GenerationFailure,
  ParseError,
};

std::string_view to_string(ErrorCode code);

// Errors caused by a theorem hypothesis not holding for the supplied
// parameters, as opposed to numerical or input failures.
bool is_hypothesis_violation(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace siws

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repscore {

enum class ErrorCode {
  ParseError,
  NonFiniteValue,
  EmptyMatrix,
  IoError,
  EmptyVector,
  SingleElement,
  InvalidEta,
  DegenerateRepresentation,
  ZeroNorm,
  OneClassOnly,
  NoPositives,
  MissingCorrectness,
  ZeroNormEmbedding,
  TooFewSamples,
  NonFiniteGradient,
  InvalidConfig,
  ShapeMismatch,
  IndexOutOfRange,
  EmptyProfile,
};

std::string_view to_string(ErrorCode code);

// Process exit status for the CLI: 2 input/parse, 3 invariant violation,
// 4 evaluation impossible, 5 numerical failure.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the training loop; carries the step at which the gradient blew up.
class NonFiniteGradientError : public Error {
 public:
  NonFiniteGradientError(long step, const std::string& what)
      : Error(ErrorCode::NonFiniteGradient, "step " + std::to_string(step) + ": " + what),
        step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace repscore

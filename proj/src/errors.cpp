#include "repscore/errors.hpp"

namespace repscore {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyVector: return "EmptyVector";
    case ErrorCode::SingleElement: return "SingleElement";
    case ErrorCode::InvalidEta: return "InvalidEta";
    case ErrorCode::DegenerateRepresentation: return "DegenerateRepresentation";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::MissingCorrectness: return "MissingCorrectness";
    case ErrorCode::ZeroNormEmbedding: return "ZeroNormEmbedding";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyProfile: return "EmptyProfile";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
    case ErrorCode::EmptyMatrix:
      return 2;
    case ErrorCode::OneClassOnly:
    case ErrorCode::NoPositives:
      return 4;
    case ErrorCode::NonFiniteGradient:
      return 5;
    default:
      return 3;
  }
}

}  // namespace repscore

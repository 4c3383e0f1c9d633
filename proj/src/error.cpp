#include "forgetting/error.hpp"

namespace forgetting {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NeverLearned: return "NeverLearned";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::AllSamplesNeverLearned: return "AllSamplesNeverLearned";
    case ErrorCode::DisjointUniverses: return "DisjointUniverses";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NoFittedSamples: return "NoFittedSamples";
    case ErrorCode::UnknownClassLabel: return "UnknownClassLabel";
    case ErrorCode::MissingLoss: return "MissingLoss";
    case ErrorCode::NegativeGap: return "NegativeGap";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InconsistentIds: return "InconsistentIds";
    case ErrorCode::NonBinaryValue: return "NonBinaryValue";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace forgetting

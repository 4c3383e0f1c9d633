#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forgetting {

enum class ErrorCode {
  InvalidArgument,
  NeverLearned,
  EmptySequence,
  AllSamplesNeverLearned,
  DisjointUniverses,
  ZeroVariance,
  NoFittedSamples,
  UnknownClassLabel,
  MissingLoss,
  NegativeGap,
  MissingFile,
  SchemaViolation,
  InconsistentIds,
  NonBinaryValue,
  IoFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported through this type; the code is what
// callers branch on, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace forgetting

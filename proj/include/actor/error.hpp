#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace actor {

enum class ErrorCode {
  DegenerateInput,
  InvalidRotation,
  ShapeMismatch,
  UnknownAction,
  EmptySequence,
  NonPositiveDuration,
  UnknownVariant,
  FixedLengthOnly,
  LengthMismatch,
  InvalidSpec,
  CorruptFile,
  VersionMismatch,
  ActionSetMismatch,
  DivergedLoss,
  IncompatibleCheckpoint,
  InsufficientData,
  DegenerateMoments,
  EmptyInput,
  InsufficientSamples,
  TooShort,
  ActionMismatch,
  AlphaOutOfRange,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace actor

#include "actor/error.hpp"

namespace actor {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidRotation: return "InvalidRotation";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownAction: return "UnknownAction";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::NonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::UnknownVariant: return "UnknownVariant";
    case ErrorCode::FixedLengthOnly: return "FixedLengthOnly";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ActionSetMismatch: return "ActionSetMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::IncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateMoments: return "DegenerateMoments";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ActionMismatch: return "ActionMismatch";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace actor

#include "zscore/error.hpp"

namespace zscore {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateEvent: return "DuplicateEvent";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::UnknownFeeTier: return "UnknownFeeTier";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::InvalidMix: return "InvalidMix";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace zscore

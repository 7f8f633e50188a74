#pragma once

#include <stdexcept>
#include <string>

namespace zscore {

enum class ErrorCode {
  InvalidArgument = 1,
  MalformedRecord,
  DuplicateEvent,
  InvalidWindow,
  UnknownFeeTier,
  EmptyInput,
  InsufficientData,
  ShapeMismatch,
  StaleCache,
  EmptySplit,
  LengthMismatch,
  MissingScore,
  EmptyReport,
  InvalidMix,
  Io,
  Config,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries a code so the C API can map it
// onto a stable status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by parse_events; line numbers are 1-based.
class RecordError : public Error {
 public:
  RecordError(ErrorCode code, std::size_t line_no, const std::string& reason)
      : Error(code, "line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no),
        reason_(reason) {}

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

}  // namespace zscore

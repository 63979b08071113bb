#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rapd {

enum class Eye : std::uint8_t { Left, Right };

inline Eye other_eye(Eye e) { return e == Eye::Left ? Eye::Right : Eye::Left; }

inline char to_char(Eye e) { return e == Eye::Left ? 'L' : 'R'; }

inline const char* to_string(Eye e) { return e == Eye::Left ? "left" : "right"; }

enum class LedColor : std::uint8_t { Red, Green, Blue, White };

inline char to_char(LedColor c) {
  switch (c) {
    case LedColor::Red: return 'R';
    case LedColor::Green: return 'G';
    case LedColor::Blue: return 'B';
    case LedColor::White: return 'W';
  }
  return '?';
}

// Every failure the library reports carries one of these categories. The CLI
// maps them onto exit codes; tests match on them.
enum class ErrorCode : std::uint8_t {
  InvalidParameter,
  NoCandidate,
  NoContour,
  DegenerateGeometry,
  DuplicateTimestamp,
  TooSparse,
  InsufficientData,
  EmptyInput,
  NonPositiveMedian,
  ParseError,
  SchemaMismatch,
  MissingFrame,
  NonMonotonicTimestamps,
  Internal,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NoCandidate: return "NoCandidate";
    case ErrorCode::NoContour: return "NoContour";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::DuplicateTimestamp: return "DuplicateTimestamp";
    case ErrorCode::TooSparse: return "TooSparse";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveMedian: return "NonPositiveMedian";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MissingFrame: return "MissingFrame";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rapd

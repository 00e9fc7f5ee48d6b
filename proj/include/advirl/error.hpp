#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace advirl {

// Every failure raised by the library carries one of these codes so callers
// (and tests) can tell apart errors that share a message shape.
enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kOutOfBounds,
  kIo,
  kMalformedFile,
  kUnsupportedFormat,
  kBadMagic,
  kTruncated,
  kVersionMismatch,
  kMissingField,
  kNonInvertible,
  kInconsistentResolution,
  kConfig,
  kNumerical,
  kNoViews,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace advirl

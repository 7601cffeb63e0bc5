#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resrec {

enum class ErrorCode {
  Io,
  Parse,
  InvalidData,
  Infeasible,
  InvalidArgument,
  MissingArtifact,
  HashMismatch,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::InvalidData: return "E_DATA";
    case ErrorCode::Infeasible: return "E_INFEASIBLE";
    case ErrorCode::InvalidArgument: return "E_ARG";
    case ErrorCode::MissingArtifact: return "E_MISSING";
    case ErrorCode::HashMismatch: return "E_HASH";
  }
  return "E_UNKNOWN";
}

/// Every failure raised by the library carries a stable code so the CLI can
/// print a single machine-parseable line.
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

}  // namespace resrec

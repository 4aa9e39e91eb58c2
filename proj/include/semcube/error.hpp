#pragma once

#include <stdexcept>
#include <string>

namespace semcube {

enum class ErrorCode {
  invalid_input,      // malformed records, bad markup, bad config
  unknown_id,         // concept, dimension, map or ball that does not exist
  invalid_operation,  // well-formed request that cannot be applied (e.g. drill-down on a leaf)
  degenerate,         // numerical failure in ranking
  io,
};

// Single exception type carried through the library. `context` holds the
// record/doc id or byte offset the failure refers to, when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string context = {})
      : std::runtime_error(context.empty() ? message : message + " [" + context + "]"),
        code_(code),
        message_(message),
        context_(std::move(context)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& context() const noexcept { return context_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::string context_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::unknown_id: return "unknown_id";
    case ErrorCode::invalid_operation: return "invalid_operation";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace semcube

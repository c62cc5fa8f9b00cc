#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace principles {

enum class ErrorCode {
  precondition,
  transport,        // retryable
  rejected,         // provider refused the request; not retryable
  empty_completion,
  dimension_mismatch,
  parse,
  duplicate_id,
  format_version,
  io,
  config,
  evaluation,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  bool retryable() const noexcept { return code_ == ErrorCode::transport; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::precondition, message);
}

}  // namespace principles

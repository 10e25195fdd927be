#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vchain {

enum class ErrorCode {
  EmptyCondition,
  MalformedUri,
  SchemaViolation,
  DuplicateState,
  UnknownAssumptionFlag,
  InvalidAssumption,
  StateBoundExceeded,
  ResultFsmMismatch,
  GoalNotReached,
};

std::string_view to_string(ErrorCode code);

// Every validation failure surfaced by the library. Callers that need to
// distinguish failures switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vchain

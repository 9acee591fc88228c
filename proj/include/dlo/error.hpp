#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dlo {

enum class ErrorCode {
  ContractViolation,
  DegenerateFrame,
  DegenerateGeometry,
  DegenerateInput,
  Dimension,
  EmptyInput,
  EmptyContact,
  InsufficientDepth,
  NoDirection,
  InvalidView,
  DescentOverrun,
  BudgetExhausted,
  Io,
  Config,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code tells callers (and the CLI
// exit-status mapping) which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Same error with "<context>: " prepended to the detail.
  Error with_context(const std::string& context) const { return Error(code_, context + ": " + detail_); }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace dlo

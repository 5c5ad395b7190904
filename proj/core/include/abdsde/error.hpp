#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace abdsde {

enum class ErrorKind {
  kNonCommensurate,
  kShapeMismatch,
  kInvalidArgument,
  kA1Violation,
  kNonPositiveDelay,
  kUnsupportedDelayForm,
  kNonTermination,
  kUnknownName,
  kNonFinite,
  kInsufficientPaths,
  kSingularDesign,
  kInfeasible,
  kNoConvergence,
  kBackendMismatch,
  kTooLarge,
  kTerminalOrderViolated,
  kParseError,
  kValidationError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-checkable error kind. All library failures
/// are reported through this type; report-style outcomes (PASS/FAIL) are not.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  /// Wraps a lower-level failure, e.g. ValidationError caused by Infeasible.
  Error(ErrorKind kind, ErrorKind cause, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The wrapped kind, or kind() when nothing is wrapped.
  ErrorKind cause() const noexcept { return cause_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  ErrorKind cause_;
  std::string detail_;
};

}  // namespace abdsde

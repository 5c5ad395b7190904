#include "abdsde/error.hpp"

namespace abdsde {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kNonCommensurate: return "NonCommensurate";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kA1Violation: return "A1Violation";
    case ErrorKind::kNonPositiveDelay: return "NonPositiveDelay";
    case ErrorKind::kUnsupportedDelayForm: return "UnsupportedDelayForm";
    case ErrorKind::kNonTermination: return "NonTermination";
    case ErrorKind::kUnknownName: return "UnknownName";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kInsufficientPaths: return "InsufficientPaths";
    case ErrorKind::kSingularDesign: return "SingularDesign";
    case ErrorKind::kInfeasible: return "Infeasible";
    case ErrorKind::kNoConvergence: return "NoConvergence";
    case ErrorKind::kBackendMismatch: return "BackendMismatch";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kTerminalOrderViolated: return "TerminalOrderViolated";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kValidationError: return "ValidationError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      cause_(kind),
      detail_(message) {}

Error::Error(ErrorKind kind, ErrorKind cause, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + "(" + std::string(to_string(cause)) +
                         "): " + message),
      kind_(kind),
      cause_(cause),
      detail_(message) {}

}  // namespace abdsde

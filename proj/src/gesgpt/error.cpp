#include "gesgpt/error.hpp"

namespace gesgpt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::IncompatibleClips: return "incompatible-clips";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Format: return "format";
    case ErrorCode::AlignmentMismatch: return "alignment-mismatch";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::MalformedReply: return "malformed-reply";
    case ErrorCode::ContractViolation: return "contract-violation";
    case ErrorCode::Transport: return "transport";
    case ErrorCode::NoGestureAvailable: return "no-gesture-available";
    case ErrorCode::Coverage: return "coverage";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = std::to_string(problems.size()) + " validation error(s)";
  for (const auto& p : problems) msg += "\n  " + p;
  return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(ErrorCode::Validation, join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace gesgpt

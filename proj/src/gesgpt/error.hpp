#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gesgpt {

enum class ErrorCode {
  InvalidArgument,
  IncompatibleClips,
  Validation,
  Format,
  AlignmentMismatch,
  EmptyInput,
  MalformedReply,
  ContractViolation,
  Transport,
  NoGestureAvailable,
  Coverage,
  NotFound,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this one exception type; the
// code is what the C API maps onto its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Validation failure carrying every individual problem found, so callers can
// report them all at once.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace gesgpt

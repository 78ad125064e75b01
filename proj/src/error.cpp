#include "edmm/error.hpp"

namespace edmm {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kOutOfSpace: return "out-of-space";
    case ErrorKind::kOutOfMemory: return "out-of-memory";
    case ErrorKind::kProtocolViolation: return "protocol-violation";
    case ErrorKind::kUseAfterFree: return "use-after-free";
    case ErrorKind::kParse: return "parse-error";
    case ErrorKind::kValidation: return "validation-error";
  }
  return "unknown";
}

SimError SimError::with_event_index(std::uint64_t index) const {
  SimError e(kind_, "event " + std::to_string(index) + ": " + what());
  e.event_index_ = index;
  e.line_ = line_;
  return e;
}

SimError SimError::with_line(std::uint64_t line) const {
  SimError e(kind_, "line " + std::to_string(line) + ": " + what());
  e.event_index_ = event_index_;
  e.line_ = line;
  return e;
}

}  // namespace edmm

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edmm {

enum class ErrorKind {
  kInvalidArgument,
  kOutOfSpace,
  kOutOfMemory,
  kProtocolViolation,
  kUseAfterFree,
  kParse,
  kValidation,
};

std::string_view error_kind_name(ErrorKind kind);

// Every failure in the simulator is reported as a SimError. Replay attaches
// the index of the trace event that failed; parse attaches the line number.
class SimError : public std::runtime_error {
 public:
  SimError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  std::optional<std::uint64_t> event_index() const { return event_index_; }
  std::optional<std::uint64_t> line() const { return line_; }

  SimError with_event_index(std::uint64_t index) const;
  SimError with_line(std::uint64_t line) const;

 private:
  ErrorKind kind_;
  std::optional<std::uint64_t> event_index_;
  std::optional<std::uint64_t> line_;
};

}  // namespace edmm

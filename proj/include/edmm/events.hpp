#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edmm/units.hpp"

namespace edmm {

enum class EventKind : std::uint8_t {
  kEenter,
  kEexit,
  kAex,
  kEresume,
  kPageFault,
  kSyscallEnter,
  kSyscallReturn,
  kEaug,
  kEaccept,
  kEtrack,
  kIpi,
  kTrim,
  kEremove,
  kEaddMeasure,
};

inline constexpr std::size_t kEventKindCount = 14;

inline constexpr std::array<EventKind, kEventKindCount> kAllEventKinds = {
    EventKind::kEenter,       EventKind::kEexit,   EventKind::kAex,
    EventKind::kEresume,      EventKind::kPageFault, EventKind::kSyscallEnter,
    EventKind::kSyscallReturn, EventKind::kEaug,   EventKind::kEaccept,
    EventKind::kEtrack,       EventKind::kIpi,     EventKind::kTrim,
    EventKind::kEremove,      EventKind::kEaddMeasure,
};

// Transitions between enclave, untrusted runtime and kernel. The fault entry
// into the kernel counts: Aex + PageFault + Eresume is the three-switch
// minimum for adding a page.
bool is_crossing(EventKind kind);

// Upper-case wire name ("EAUG", "PAGE_FAULT", ...) and lower-case counter
// name ("eaug", "pf", ...).
std::string_view event_kind_name(EventKind kind);
std::string_view event_counter_name(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view name);

enum class Side : std::uint8_t { kEnclave, kRuntime, kKernel };

std::string_view side_name(Side side);

struct Event {
  EventKind kind;
  PageIndex start = 0;
  PageCount len = 0;  // 0 when the event is not tied to pages
  Side side = Side::kEnclave;

  friend bool operator==(const Event&, const Event&) = default;
};

using EventLog = std::vector<Event>;

// One line per event: "KIND start len side".
std::string serialize_event_log(const EventLog& log);
EventLog parse_event_log(std::string_view text);

// Enclave entry state machine: starting inside the enclave, exits (Eexit,
// Aex) and entries (Eenter, Eresume) must alternate and the log must end
// inside. Returns the index of the first offending event, or the log size
// if it ends outside.
std::optional<std::size_t> find_entry_violation(const EventLog& log);

struct Counters {
  std::array<std::uint64_t, kEventKindCount> by_kind{};
  std::uint64_t reused_cached_pages = 0;
  std::uint64_t posix_warnings = 0;
  std::uint64_t accessed_pages = 0;

  std::uint64_t get(EventKind kind) const { return by_kind[static_cast<std::size_t>(kind)]; }
  std::uint64_t& at(EventKind kind) { return by_kind[static_cast<std::size_t>(kind)]; }
  std::uint64_t crossings() const;
  std::uint64_t page_faults() const { return get(EventKind::kPageFault); }

  Counters& operator+=(const Counters& other);
  friend Counters operator+(Counters a, const Counters& b) { return a += b; }
  friend bool operator==(const Counters&, const Counters&) = default;
};

Counters summarize(const EventLog& log);

}  // namespace edmm

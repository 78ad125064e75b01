#include "edmm/events.hpp"

#include <charconv>
#include <sstream>

#include "edmm/error.hpp"

namespace edmm {

namespace {

struct KindNames {
  EventKind kind;
  std::string_view wire;
  std::string_view counter;
};

constexpr std::array<KindNames, kEventKindCount> kNames = {{
    {EventKind::kEenter, "EENTER", "eenter"},
    {EventKind::kEexit, "EEXIT", "eexit"},
    {EventKind::kAex, "AEX", "aex"},
    {EventKind::kEresume, "ERESUME", "eresume"},
    {EventKind::kPageFault, "PAGE_FAULT", "pf"},
    {EventKind::kSyscallEnter, "SYSCALL_ENTER", "syscall_enter"},
    {EventKind::kSyscallReturn, "SYSCALL_RETURN", "syscall_return"},
    {EventKind::kEaug, "EAUG", "eaug"},
    {EventKind::kEaccept, "EACCEPT", "eaccept"},
    {EventKind::kEtrack, "ETRACK", "etrack"},
    {EventKind::kIpi, "IPI", "ipi"},
    {EventKind::kTrim, "TRIM", "trim"},
    {EventKind::kEremove, "EREMOVE", "eremove"},
    {EventKind::kEaddMeasure, "EADD_MEASURE", "eadd_measure"},
}};

std::uint64_t parse_field(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw SimError(ErrorKind::kParse, "bad integer '" + std::string(tok) + "'").with_line(line);
  }
  return v;
}

}  // namespace

bool is_crossing(EventKind kind) {
  switch (kind) {
    case EventKind::kEenter:
    case EventKind::kEexit:
    case EventKind::kAex:
    case EventKind::kEresume:
    case EventKind::kPageFault:
    case EventKind::kSyscallEnter:
    case EventKind::kSyscallReturn:
    case EventKind::kIpi:
      return true;
    default:
      return false;
  }
}

std::string_view event_kind_name(EventKind kind) {
  return kNames[static_cast<std::size_t>(kind)].wire;
}

std::string_view event_counter_name(EventKind kind) {
  return kNames[static_cast<std::size_t>(kind)].counter;
}

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (const auto& n : kNames) {
    if (n.wire == name) return n.kind;
  }
  return std::nullopt;
}

std::string_view side_name(Side side) {
  switch (side) {
    case Side::kEnclave: return "enclave";
    case Side::kRuntime: return "runtime";
    case Side::kKernel: return "kernel";
  }
  return "?";
}

std::string serialize_event_log(const EventLog& log) {
  std::string out;
  out.reserve(log.size() * 24);
  for (const Event& e : log) {
    out += event_kind_name(e.kind);
    out += ' ';
    out += std::to_string(e.start);
    out += ' ';
    out += std::to_string(e.len);
    out += ' ';
    out += side_name(e.side);
    out += '\n';
  }
  return out;
}

EventLog parse_event_log(std::string_view text) {
  EventLog log;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty()) continue;

    std::array<std::string_view, 4> tok;
    std::size_t n = 0;
    while (!line.empty()) {
      const auto sp = line.find(' ');
      if (n == tok.size()) throw SimError(ErrorKind::kParse, "too many fields").with_line(line_no);
      tok[n++] = line.substr(0, sp);
      line.remove_prefix(sp == std::string_view::npos ? line.size() : sp + 1);
    }
    if (n != tok.size()) throw SimError(ErrorKind::kParse, "expected 4 fields").with_line(line_no);

    const auto kind = parse_event_kind(tok[0]);
    if (!kind) {
      throw SimError(ErrorKind::kParse, "unknown event '" + std::string(tok[0]) + "'").with_line(line_no);
    }
    Side side;
    if (tok[3] == "enclave") side = Side::kEnclave;
    else if (tok[3] == "runtime") side = Side::kRuntime;
    else if (tok[3] == "kernel") side = Side::kKernel;
    else throw SimError(ErrorKind::kParse, "unknown side '" + std::string(tok[3]) + "'").with_line(line_no);

    log.push_back(Event{*kind, parse_field(tok[1], line_no), parse_field(tok[2], line_no), side});
  }
  return log;
}

std::optional<std::size_t> find_entry_violation(const EventLog& log) {
  bool inside = true;
  for (std::size_t i = 0; i < log.size(); ++i) {
    switch (log[i].kind) {
      case EventKind::kEexit:
      case EventKind::kAex:
        if (!inside) return i;
        inside = false;
        break;
      case EventKind::kEenter:
      case EventKind::kEresume:
        if (inside) return i;
        inside = true;
        break;
      default:
        break;
    }
  }
  if (!inside) return log.size();
  return std::nullopt;
}

std::uint64_t Counters::crossings() const {
  std::uint64_t total = 0;
  for (EventKind k : kAllEventKinds) {
    if (is_crossing(k)) total += get(k);
  }
  return total;
}

Counters& Counters::operator+=(const Counters& other) {
  for (std::size_t i = 0; i < kEventKindCount; ++i) by_kind[i] += other.by_kind[i];
  reused_cached_pages += other.reused_cached_pages;
  posix_warnings += other.posix_warnings;
  accessed_pages += other.accessed_pages;
  return *this;
}

Counters summarize(const EventLog& log) {
  Counters c;
  for (const Event& e : log) ++c.at(e.kind);
  return c;
}

}  // namespace edmm

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "edmm/units.hpp"

namespace edmm {

enum class TraceOp : std::uint8_t { kMmap, kMunmap, kAccess };

// Regions are addressed by the ordinal of the mmap that created them
// (0-based, in trace order) plus a page offset into that mapping.
struct TraceEvent {
  TraceOp op = TraceOp::kMmap;
  std::uint64_t region = 0;  // unused for mmap
  PageCount offset = 0;      // unused for mmap
  PageCount len = 0;

  static TraceEvent mmap(PageCount len) { return {TraceOp::kMmap, 0, 0, len}; }
  static TraceEvent munmap(std::uint64_t region, PageCount offset, PageCount len) {
    return {TraceOp::kMunmap, region, offset, len};
  }
  static TraceEvent access(std::uint64_t region, PageCount offset, PageCount len) {
    return {TraceOp::kAccess, region, offset, len};
  }

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceHeader {
  PageCount pool_size = 0;
  std::string name;
  std::uint64_t seed = 0;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Text format, one record per line:
//   pool <pages>
//   # name <text>        (optional, written when name is non-empty)
//   # seed <n>           (optional, written when seed is non-zero)
//   # <anything else>    (ignored)
//   mmap <len> | munmap <region> <offset> <len> | access <region> <offset> <len>
// Parse errors carry the 1-based line number.
Trace parse_trace(std::string_view text);
std::string serialize_trace(const Trace& trace);

Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

// Static checks: pool >= 1, lengths >= 1, region ordinals refer to an
// earlier mmap, offset + len within that mapping. Throws validation-error
// with the event index.
void validate_trace(const Trace& trace);

}  // namespace edmm

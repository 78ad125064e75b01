#include "edmm/trace.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "edmm/error.hpp"

namespace edmm {

namespace {

std::uint64_t parse_int(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw SimError(ErrorKind::kParse, "bad integer '" + std::string(tok) + "'").with_line(line);
  }
  return v;
}

// Splits on single spaces; an empty field (double space, leading or
// trailing space) is a format error.
std::size_t split_fields(std::string_view line, std::array<std::string_view, 5>& out, std::size_t line_no) {
  std::size_t n = 0;
  while (true) {
    const auto sp = line.find(' ');
    const std::string_view tok = line.substr(0, sp);
    if (tok.empty()) throw SimError(ErrorKind::kParse, "empty field").with_line(line_no);
    if (n == out.size()) throw SimError(ErrorKind::kParse, "too many fields").with_line(line_no);
    out[n++] = tok;
    if (sp == std::string_view::npos) break;
    line.remove_prefix(sp + 1);
  }
  return n;
}

}  // namespace

Trace parse_trace(std::string_view text) {
  Trace trace;
  std::size_t line_no = 0;
  bool have_pool = false;
  std::array<std::string_view, 5> f;
  std::vector<PageCount> mmap_lens;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) {
      throw SimError(ErrorKind::kParse, "missing final newline").with_line(line_no + 1);
    }
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    ++line_no;

    if (!have_pool) {
      const std::size_t n = split_fields(line, f, line_no);
      if (n != 2 || f[0] != "pool") throw SimError(ErrorKind::kParse, "expected 'pool <pages>'").with_line(line_no);
      trace.header.pool_size = parse_int(f[1], line_no);
      if (trace.header.pool_size == 0) throw SimError(ErrorKind::kParse, "pool must be >= 1 page").with_line(line_no);
      have_pool = true;
      continue;
    }
    if (line.starts_with("#")) {
      if (line.starts_with("# name ")) {
        trace.header.name = std::string(line.substr(7));
      } else if (line.starts_with("# seed ")) {
        trace.header.seed = parse_int(line.substr(7), line_no);
      }
      continue;
    }

    const std::size_t n = split_fields(line, f, line_no);
    TraceEvent ev;
    if (f[0] == "mmap") {
      if (n != 2) throw SimError(ErrorKind::kParse, "expected 'mmap <len>'").with_line(line_no);
      ev = TraceEvent::mmap(parse_int(f[1], line_no));
    } else if (f[0] == "munmap" || f[0] == "access") {
      if (n != 4) {
        throw SimError(ErrorKind::kParse, "expected '" + std::string(f[0]) + " <region> <offset> <len>'")
            .with_line(line_no);
      }
      ev = TraceEvent{f[0] == "munmap" ? TraceOp::kMunmap : TraceOp::kAccess, parse_int(f[1], line_no),
                      parse_int(f[2], line_no), parse_int(f[3], line_no)};
    } else {
      throw SimError(ErrorKind::kParse, "unknown record '" + std::string(f[0]) + "'").with_line(line_no);
    }
    if (ev.len == 0) throw SimError(ErrorKind::kParse, "length must be >= 1").with_line(line_no);
    if (ev.op == TraceOp::kMmap) {
      mmap_lens.push_back(ev.len);
    } else if (ev.region >= mmap_lens.size()) {
      throw SimError(ErrorKind::kValidation,
                     "region " + std::to_string(ev.region) + " referenced before its mmap")
          .with_line(line_no);
    } else if (ev.offset > mmap_lens[ev.region] || ev.len > mmap_lens[ev.region] - ev.offset) {
      throw SimError(ErrorKind::kValidation, "range outside region " + std::to_string(ev.region))
          .with_line(line_no);
    }
    trace.events.push_back(ev);
  }
  if (!have_pool) throw SimError(ErrorKind::kParse, "empty trace, expected 'pool <pages>'").with_line(1);
  return trace;
}

std::string serialize_trace(const Trace& trace) {
  std::string out;
  out.reserve(32 + trace.events.size() * 20);
  out += "pool " + std::to_string(trace.header.pool_size) + "\n";
  if (!trace.header.name.empty()) out += "# name " + trace.header.name + "\n";
  if (trace.header.seed != 0) out += "# seed " + std::to_string(trace.header.seed) + "\n";
  for (const TraceEvent& e : trace.events) {
    switch (e.op) {
      case TraceOp::kMmap:
        out += "mmap ";
        break;
      case TraceOp::kMunmap:
        out += "munmap " + std::to_string(e.region) + " " + std::to_string(e.offset) + " ";
        break;
      case TraceOp::kAccess:
        out += "access " + std::to_string(e.region) + " " + std::to_string(e.offset) + " ";
        break;
    }
    out += std::to_string(e.len);
    out += '\n';
  }
  return out;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError(ErrorKind::kInvalidArgument, "cannot open trace " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void save_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SimError(ErrorKind::kInvalidArgument, "cannot write trace " + path);
  out << serialize_trace(trace);
  if (!out.flush()) throw SimError(ErrorKind::kInvalidArgument, "write failed for " + path);
}

void validate_trace(const Trace& trace) {
  if (trace.header.pool_size == 0) throw SimError(ErrorKind::kValidation, "pool must be >= 1 page");
  std::vector<PageCount> lens;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent& e = trace.events[i];
    auto fail = [&](const std::string& msg) {
      throw SimError(ErrorKind::kValidation, msg).with_event_index(i);
    };
    if (e.len == 0) fail("length must be >= 1");
    if (e.op == TraceOp::kMmap) {
      lens.push_back(e.len);
      continue;
    }
    if (e.region >= lens.size()) {
      fail("region " + std::to_string(e.region) + " referenced before its mmap");
    }
    const PageCount rl = lens[e.region];
    if (e.offset > rl || e.len > rl - e.offset) fail("range outside region " + std::to_string(e.region));
  }
}

}  // namespace edmm

#include "edmm/cost_model.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "edmm/error.hpp"

namespace edmm {

namespace {

constexpr std::string_view kZeroPage = "zero_page";
constexpr std::string_view kBaseLoad = "base_load";
constexpr std::string_view kAccessPage = "access_page";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double* field(CostParams& p, std::string_view key) {
  if (key == kZeroPage) return &p.zero_page_us;
  if (key == kBaseLoad) return &p.base_load_us;
  if (key == kAccessPage) return &p.access_page_us;
  for (EventKind k : kAllEventKinds) {
    if (event_counter_name(k) == key) return &p.latency(k);
  }
  return nullptr;
}

}  // namespace

CostParams default_params() {
  CostParams p;
  using K = EventKind;
  // Demand path: aex + pf + eenter + eexit + eresume at 5 us, eaug 3, eaccept 2.
  p.latency(K::kAex) = 5.0;
  p.latency(K::kPageFault) = 5.0;
  p.latency(K::kEenter) = 5.0;
  p.latency(K::kEexit) = 5.0;
  p.latency(K::kEresume) = 5.0;
  p.latency(K::kEaug) = 3.0;
  p.latency(K::kEaccept) = 2.0;
  // Plain fault: syscall_enter + pf + syscall_return = 8 us.
  p.latency(K::kSyscallEnter) = 1.5;
  p.latency(K::kSyscallReturn) = 1.5;
  p.latency(K::kIpi) = 5.0;
  p.latency(K::kEtrack) = 1.0;
  p.latency(K::kTrim) = 1.0;
  p.latency(K::kEremove) = 1.0;
  p.latency(K::kEaddMeasure) = 10.0;
  p.zero_page_us = 0.0;
  p.base_load_us = 50000.0;
  p.access_page_us = 40.0;
  return p;
}

CostParams parse_cost_params(std::string_view text, const CostParams& base) {
  CostParams params = base;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw SimError(ErrorKind::kParse, "expected 'name = microseconds'").with_line(line_no);
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    double* slot = field(params, key);
    if (!slot) throw SimError(ErrorKind::kParse, "unknown cost key '" + std::string(key) + "'").with_line(line_no);
    if (!seen.emplace(key).second) {
      throw SimError(ErrorKind::kParse, "duplicate cost key '" + std::string(key) + "'").with_line(line_no);
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
      throw SimError(ErrorKind::kParse, "bad number '" + std::string(value) + "'").with_line(line_no);
    }
    if (!(v >= 0)) throw SimError(ErrorKind::kParse, "negative latency").with_line(line_no);
    *slot = v;
  }
  return params;
}

std::string serialize_cost_params(const CostParams& params) {
  std::ostringstream os;
  os.precision(17);
  for (EventKind k : kAllEventKinds) os << event_counter_name(k) << " = " << params.latency(k) << '\n';
  os << kZeroPage << " = " << params.zero_page_us << '\n';
  os << kBaseLoad << " = " << params.base_load_us << '\n';
  os << kAccessPage << " = " << params.access_page_us << '\n';
  return os.str();
}

CostParams load_cost_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError(ErrorKind::kInvalidArgument, "cannot open cost file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_cost_params(buf.str());
}

double exec_time_us(const Counters& runtime, const CostParams& params) {
  double t = 0.0;
  for (EventKind k : kAllEventKinds) {
    if (k == EventKind::kEaddMeasure) continue;
    t += static_cast<double>(runtime.get(k)) * params.latency(k);
  }
  t += static_cast<double>(runtime.reused_cached_pages) * params.zero_page_us;
  t += static_cast<double>(runtime.accessed_pages) * params.access_page_us;
  return t;
}

double load_time_us(const Counters& load, const CostParams& params) {
  return params.base_load_us +
         static_cast<double>(load.get(EventKind::kEaddMeasure)) * params.latency(EventKind::kEaddMeasure);
}

TimeReport modeled_time(const Counters& runtime, const Counters& load, const CostParams& params) {
  return TimeReport{load_time_us(load, params), exec_time_us(runtime, params)};
}

}  // namespace edmm

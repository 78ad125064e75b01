#include "edmm/replay.hpp"

#include <algorithm>

#include "edmm/error.hpp"

namespace edmm {

namespace {

struct Mapping {
  Region original;
  std::vector<Region> fragments;  // live pieces, ascending by start
};

class Replayer {
 public:
  Replayer(const StrategyConfig& config, PageCount pool_size, Manager::EventSink sink)
      : mgr_(config, pool_size, std::move(sink)) {}

  void apply(const TraceEvent& e) {
    switch (e.op) {
      case TraceOp::kMmap: {
        const Region r = mgr_.mmap(e.len);
        mappings_.push_back(Mapping{r, {r}});
        break;
      }
      case TraceOp::kMunmap:
        munmap(mapping(e), e.offset, e.len);
        break;
      case TraceOp::kAccess:
        access(mapping(e), e.offset, e.len);
        break;
    }
  }

  const Manager& manager() const { return mgr_; }

 private:
  Mapping& mapping(const TraceEvent& e) {
    if (e.region >= mappings_.size()) {
      throw SimError(ErrorKind::kValidation, "region " + std::to_string(e.region) + " referenced before its mmap");
    }
    Mapping& m = mappings_[e.region];
    if (e.offset > m.original.len || e.len > m.original.len - e.offset) {
      throw SimError(ErrorKind::kInvalidArgument, "range outside region " + std::to_string(e.region));
    }
    return m;
  }

  void munmap(Mapping& m, PageCount offset, PageCount len) {
    const PageIndex a = m.original.start + offset;
    const PageIndex b = a + len;
    PageCount covered = 0;
    for (const Region& f : m.fragments) {
      covered += std::min(b, f.end()) > std::max(a, f.start) ? std::min(b, f.end()) - std::max(a, f.start) : 0;
    }
    if (covered != len) throw SimError(ErrorKind::kInvalidArgument, "munmap of pages that are not mapped");

    std::vector<UnmapSlice> slices;
    std::vector<std::size_t> touched;
    for (std::size_t i = 0; i < m.fragments.size(); ++i) {
      const Region& f = m.fragments[i];
      const PageIndex lo = std::max(a, f.start);
      const PageIndex hi = std::min(b, f.end());
      if (lo >= hi) continue;
      slices.push_back(UnmapSlice{f, lo - f.start, hi - lo});
      touched.push_back(i);
    }
    const auto remainders = mgr_.munmap(slices);

    std::vector<Region> next;
    std::size_t k = 0;
    for (std::size_t i = 0; i < m.fragments.size(); ++i) {
      if (k < touched.size() && touched[k] == i) {
        next.insert(next.end(), remainders[k].begin(), remainders[k].end());
        ++k;
      } else {
        next.push_back(m.fragments[i]);
      }
    }
    m.fragments = std::move(next);
  }

  void access(const Mapping& m, PageCount offset, PageCount len) {
    const PageIndex a = m.original.start + offset;
    const PageIndex b = a + len;
    PageIndex p = a;
    for (const Region& f : m.fragments) {
      if (f.end() <= p) continue;
      if (f.start >= b) break;
      if (f.start > p) {
        stale(m, p, f.start);
        p = f.start;
      }
      const PageIndex hi = std::min(b, f.end());
      mgr_.access(f, p - f.start, hi - p);
      p = hi;
    }
    if (p < b) stale(m, p, b);
  }

  void stale(const Mapping& m, PageIndex lo, PageIndex hi) {
    mgr_.access(m.original, lo - m.original.start, hi - lo);
  }

  Manager mgr_;
  std::vector<Mapping> mappings_;
};

}  // namespace

ReplayResult replay(const Trace& trace, const StrategyConfig& config, const CostParams& params,
                    Manager::EventSink sink) {
  Replayer r(config, trace.header.pool_size, std::move(sink));
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    try {
      r.apply(trace.events[i]);
    } catch (const SimError& e) {
      throw e.with_event_index(i);
    }
  }
  ReplayResult out;
  out.report = r.manager().report();
  out.time = modeled_time(out.report.counters, out.report.load_counters, params);
  return out;
}

}  // namespace edmm

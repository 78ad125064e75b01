#include "edmm/strategy.hpp"

#include <algorithm>

#include "edmm/error.hpp"
#include "edmm/flows.hpp"

namespace edmm {

namespace {

// Calls fn(start, len, state) for each maximal run of equal state.
template <typename Fn>
void for_each_state_run(const PagePool& pool, PageIndex start, PageIndex end, Fn&& fn) {
  PageIndex p = start;
  while (p < end) {
    const PageState s = pool.state(p);
    PageIndex q = p + 1;
    while (q < end && pool.state(q) == s) ++q;
    fn(p, q - p, s);
    p = q;
  }
}

}  // namespace

Manager::Manager(const StrategyConfig& config, PageCount pool_size, EventSink sink)
    : config_(config), pool_((config.validate(pool_size), pool_size)), sink_(std::move(sink)) {
  load_mapped_end_ = config_.mode == Mode::kStatic ? pool_size
                                                   : config_.binary_pages + config_.prealloc_pages;
  const EventLog load = flow_load(load_mapped_end_);
  load_counters_ = summarize(load);
  if (sink_) sink_(load);
  for (PageIndex p = 0; p < load_mapped_end_; ++p) pool_.transition(p, PageState::kMapped);

  if (config_.binary_pages > 0) {
    const Region binary = pool_.reserve(config_.binary_pages, false);
    for (PageIndex p = binary.start; p < binary.end(); ++p) pool_.transition(p, PageState::kAllocated);
  }
  if (config_.lazy_free) cache_limit_ = config_.lazy_free->floor_times(pool_size);
  note_mapped();
}

void Manager::record(const EventLog& log) {
  if (log.empty()) return;
  counters_ += summarize(log);
  if (sink_) sink_(log);
}

void Manager::note_mapped() { peak_mapped_ = std::max(peak_mapped_, pool_.hardware_mapped()); }

Region Manager::mmap(PageCount len) {
  if (len == 0) throw SimError(ErrorKind::kInvalidArgument, "mmap of zero pages");
  const bool prefer_cached = config_.lazy_free && !config_.lazy_free->is_zero();

  Region region;
  try {
    region = pool_.reserve(len, prefer_cached);
  } catch (const SimError& e) {
    if (e.kind() != ErrorKind::kOutOfSpace) throw;
    if (pool_.counts().cached == 0) throw SimError(ErrorKind::kOutOfMemory, e.what());
    flush_cache();
    try {
      region = pool_.reserve(len, prefer_cached);
    } catch (const SimError& retry) {
      if (retry.kind() != ErrorKind::kOutOfSpace) throw;
      throw SimError(ErrorKind::kOutOfMemory, retry.what());
    }
  }

  for_each_state_run(pool_, region.start, region.end(), [&](PageIndex start, PageCount n, PageState s) {
    switch (s) {
      case PageState::kCached:
        counters_.reused_cached_pages += n;
        [[fallthrough]];
      case PageState::kMapped:
        for (PageIndex p = start; p < start + n; ++p) pool_.transition(p, PageState::kAllocated);
        break;
      case PageState::kUnmapped:
        if (config_.mode == Mode::kEdmmDemand) break;  // mapped on first touch
        if (config_.mode == Mode::kStatic) {
          throw SimError(ErrorKind::kProtocolViolation, "unmapped page in a static enclave");
        }
        record(config_.batch ? flow_batch_alloc(pool_, Run{start, n})
                             : flow_eager_accept(pool_, Run{start, n}));
        for (PageIndex p = start; p < start + n; ++p) pool_.transition(p, PageState::kAllocated);
        break;
      default:
        throw SimError(ErrorKind::kProtocolViolation,
                       "free page " + std::to_string(start) + " is " + std::string(page_state_name(s)));
    }
  });
  note_mapped();
  return region;
}

void Manager::access(const Region& region, PageCount offset, PageCount len) {
  if (len == 0) return;
  if (!pool_.is_live(region.handle)) {
    if (offset > region.len || len > region.len - offset) {
      throw SimError(ErrorKind::kInvalidArgument, "access outside region");
    }
    for (PageIndex p = region.start + offset; p < region.start + offset + len; ++p) {
      if (pool_.state(p) != PageState::kCached) {
        throw SimError(ErrorKind::kUseAfterFree,
                       "access to freed page " + std::to_string(p) + " (" +
                           std::string(page_state_name(pool_.state(p))) + ")");
      }
    }
    // Lazy free left the pages mapped, so the access silently succeeds.
    ++counters_.posix_warnings;
    counters_.accessed_pages += len;
    return;
  }

  const Region live = *pool_.find_region(region.handle);
  if (offset > live.len || len > live.len - offset) {
    throw SimError(ErrorKind::kInvalidArgument, "access outside region");
  }
  counters_.accessed_pages += len;
  const PageIndex end = live.start + offset + len;
  PageIndex p = live.start + offset;
  while (p < end) {
    if (pool_.state(p) != PageState::kUnmapped) {
      ++p;
      continue;
    }
    if (config_.mode != Mode::kEdmmDemand) {
      throw SimError(ErrorKind::kProtocolViolation, "unmapped page inside a live region");
    }
    // One fault may map pages past the accessed range; they are the
    // region's from now on and later touches are free.
    record(flow_demand(pool_, p, config_.demand_n, live.end()));
    while (p < live.end() && pool_.state(p) == PageState::kMapped) {
      pool_.transition(p, PageState::kAllocated);
      ++p;
    }
  }
  note_mapped();
}

std::vector<Region> Manager::munmap(const Region& region, PageCount offset, PageCount len) {
  const UnmapSlice slice{region, offset, len};
  return std::move(munmap(std::span<const UnmapSlice>(&slice, 1)).front());
}

std::vector<std::vector<Region>> Manager::munmap(std::span<const UnmapSlice> slices) {
  std::vector<Region> live;
  live.reserve(slices.size());
  for (const UnmapSlice& s : slices) {
    const auto r = pool_.find_region(s.region.handle);
    if (!r) throw SimError(ErrorKind::kInvalidArgument, "munmap of a region that is not live");
    if (s.len == 0 || s.offset > r->len || s.len > r->len - s.offset) {
      throw SimError(ErrorKind::kInvalidArgument, "munmap range outside region");
    }
    for (const Region& other : live) {
      if (other.handle == r->handle) throw SimError(ErrorKind::kInvalidArgument, "region listed twice in munmap");
    }
    live.push_back(*r);
  }

  std::vector<std::vector<Region>> remainders;
  std::vector<PageIndex> to_remove;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    remainders.push_back(pool_.release(live[i], slices[i].offset, slices[i].len).remainders);
    const PageIndex start = live[i].start + slices[i].offset;
    for (PageIndex p = start; p < start + slices[i].len; ++p) {
      const PageState s = pool_.state(p);
      if (s == PageState::kUnmapped) continue;  // granted but never touched
      if (s != PageState::kAllocated) {
        throw SimError(ErrorKind::kProtocolViolation,
                       "region page " + std::to_string(p) + " is " + std::string(page_state_name(s)));
      }
      if (is_load_time(p)) {
        pool_.transition(p, PageState::kMapped);
      } else if (config_.lazy_free) {
        pool_.cache(p, free_sequence_++);
      } else {
        to_remove.push_back(p);
      }
    }
  }
  remove_runs(std::move(to_remove));
  evict_over_limit();
  return remainders;
}

void Manager::remove_runs(std::vector<PageIndex> pages) {
  std::sort(pages.begin(), pages.end());
  std::size_t i = 0;
  while (i < pages.size()) {
    std::size_t j = i + 1;
    while (j < pages.size() && pages[j] == pages[j - 1] + 1) ++j;
    record(flow_remove(pool_, Run{pages[i], j - i}, config_.enclave_threads));
    i = j;
  }
}

void Manager::evict_over_limit() {
  const PageCount cached = pool_.counts().cached;
  if (cached <= cache_limit_) return;
  std::vector<PageIndex> victims = pool_.cached_in_free_order();
  victims.resize(cached - cache_limit_);
  remove_runs(std::move(victims));
}

void Manager::flush_cache() { remove_runs(pool_.cached_in_free_order()); }

Report Manager::report() const {
  return Report{counters_, load_counters_, peak_mapped_, pool_.counts()};
}

}  // namespace edmm

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "edmm/config.hpp"
#include "edmm/events.hpp"
#include "edmm/page_pool.hpp"

namespace edmm {

struct UnmapSlice {
  Region region;
  PageCount offset = 0;
  PageCount len = 0;
};

struct Report {
  Counters counters;       // runtime events only
  Counters load_counters;  // enclave build and measurement
  PageCount peak_mapped = 0;
  PoolCounts final_pages;

  friend bool operator==(const Report&, const Report&) = default;
};

// Enclave memory manager for one strategy. Composes the page pool with the
// protocol flows and accumulates their counters. Single-threaded.
class Manager {
 public:
  using EventSink = std::function<void(const EventLog&)>;

  // Builds the enclave: adds and measures the load-time pages and reserves
  // the binary region at the bottom of the pool.
  Manager(const StrategyConfig& config, PageCount pool_size, EventSink sink = {});

  Region mmap(PageCount len);

  // Touches pages [offset, offset + len) of the region. An access through a
  // region that is no longer live succeeds only when every page is still
  // held in the lazy-free cache, and is counted as a POSIX warning.
  void access(const Region& region, PageCount offset, PageCount len);

  // Returns the live remainders of the region (zero, one or two).
  std::vector<Region> munmap(const Region& region, PageCount offset, PageCount len);

  // Frees several slices as one operation: the lazy-free threshold is
  // enforced once, after every slice is released. All slices are checked
  // before anything changes. Returns the remainders per slice.
  std::vector<std::vector<Region>> munmap(std::span<const UnmapSlice> slices);

  Report report() const;

  const PagePool& pool() const { return pool_; }
  const StrategyConfig& config() const { return config_; }
  PageCount cache_limit() const { return cache_limit_; }

 private:
  void record(const EventLog& log);
  void remove_runs(std::vector<PageIndex> pages);
  void evict_over_limit();
  void flush_cache();
  void note_mapped();
  bool is_load_time(PageIndex page) const { return page < load_mapped_end_; }

  StrategyConfig config_;
  PagePool pool_;
  EventSink sink_;
  Counters counters_;
  Counters load_counters_;
  PageCount peak_mapped_ = 0;
  PageIndex load_mapped_end_ = 0;
  PageCount cache_limit_ = 0;
  std::uint64_t free_sequence_ = 0;
};

}  // namespace edmm

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edmm/units.hpp"

namespace edmm {

enum class PageState : std::uint8_t {
  kUnmapped,
  kMapped,
  kAllocated,
  kCached,
  kTrimPending,
};

std::string_view page_state_name(PageState s);

// Unmapped->Allocated is only legal under demand allocation, where a page is
// logically granted before it is mapped. Allocated->Mapped covers pages that
// were mapped at load time and go back to the pool without being removed.
bool is_legal_transition(PageState from, PageState to);

enum class RegionHandle : std::uint64_t {};

struct Region {
  RegionHandle handle{};
  PageIndex start = 0;
  PageCount len = 0;

  PageIndex end() const { return start + len; }
  friend bool operator==(const Region&, const Region&) = default;
};

struct Run {
  PageIndex start = 0;
  PageCount len = 0;

  PageIndex end() const { return start + len; }
  friend bool operator==(const Run&, const Run&) = default;
};

struct PoolCounts {
  PageCount mapped = 0;
  PageCount allocated = 0;
  PageCount cached = 0;
  PageCount unmapped = 0;
  PageCount trim_pending = 0;

  PageCount total() const { return mapped + allocated + cached + unmapped + trim_pending; }
  friend bool operator==(const PoolCounts&, const PoolCounts&) = default;
};

struct ReleaseResult {
  std::vector<Run> freed;          // coalescing view: the released sub-range
  std::vector<Region> remainders;  // up to two live pieces of the old region
};

// Bookkeeping for the enclave's virtual page pool. Ownership (regions and
// free runs) and per-page state are tracked separately: reserve/release only
// move pages between regions and the free index, while the strategy layer
// drives every state change through transition()/cache().
class PagePool {
 public:
  explicit PagePool(PageCount pool_size);

  PageCount size() const { return static_cast<PageCount>(states_.size()); }
  PageState state(PageIndex page) const { return states_.at(page); }

  Region reserve(PageCount len, bool prefer_cached);
  ReleaseResult release(const Region& region, PageCount offset, PageCount len);

  bool is_live(RegionHandle handle) const { return regions_.contains(handle); }
  std::optional<Region> find_region(RegionHandle handle) const;
  std::size_t live_region_count() const { return regions_.size(); }

  // Throws protocol-violation on an illegal transition. Moving a page into
  // Cached must go through cache() so it gets a free-sequence stamp.
  void transition(PageIndex page, PageState to);
  void cache(PageIndex page, std::uint64_t free_seq);

  PoolCounts counts() const { return counts_; }
  PageCount hardware_mapped() const { return size() - counts_.unmapped; }

  const std::map<PageIndex, PageCount>& free_runs() const { return free_; }
  const std::map<PageIndex, PageCount>& cached_runs() const { return cached_; }
  std::optional<PageIndex> oldest_cached() const;
  std::vector<PageIndex> cached_in_free_order() const;

  // O(pool) consistency check used by tests; returns a description of the
  // first violated invariant, or nothing.
  std::optional<std::string> check_invariants() const;

 private:
  void add_free(PageIndex start, PageCount len);
  void take_free(PageIndex start, PageCount len);
  void add_cached_page(PageIndex page);
  void remove_cached_page(PageIndex page);
  PageCount& count_for(PageState s);

  std::vector<PageState> states_;
  PoolCounts counts_;

  struct RegionRecord {
    PageIndex start;
    PageCount len;
  };
  std::unordered_map<RegionHandle, RegionRecord> regions_;
  std::uint64_t next_handle_ = 1;

  std::map<PageIndex, PageCount> free_;    // maximal runs of unowned pages
  std::map<PageIndex, PageCount> cached_;  // maximal runs of Cached pages
  std::set<std::pair<PageCount, PageIndex>> cached_by_len_;

  std::vector<std::uint64_t> cache_seq_;
  std::map<std::uint64_t, PageIndex> cached_fifo_;
};

}  // namespace edmm

#include "edmm/page_pool.hpp"

#include <sstream>

#include "edmm/error.hpp"

namespace edmm {

std::string_view page_state_name(PageState s) {
  switch (s) {
    case PageState::kUnmapped: return "unmapped";
    case PageState::kMapped: return "mapped";
    case PageState::kAllocated: return "allocated";
    case PageState::kCached: return "cached";
    case PageState::kTrimPending: return "trim-pending";
  }
  return "?";
}

bool is_legal_transition(PageState from, PageState to) {
  using S = PageState;
  switch (from) {
    case S::kUnmapped: return to == S::kMapped || to == S::kAllocated;
    case S::kMapped: return to == S::kAllocated || to == S::kTrimPending;
    case S::kAllocated: return to == S::kCached || to == S::kTrimPending || to == S::kMapped;
    case S::kCached: return to == S::kAllocated || to == S::kTrimPending;
    case S::kTrimPending: return to == S::kUnmapped;
  }
  return false;
}

PagePool::PagePool(PageCount pool_size) {
  if (pool_size == 0) throw SimError(ErrorKind::kInvalidArgument, "pool_size must be >= 1");
  states_.assign(pool_size, PageState::kUnmapped);
  cache_seq_.assign(pool_size, 0);
  counts_.unmapped = pool_size;
  free_.emplace(0, pool_size);
}

PageCount& PagePool::count_for(PageState s) {
  switch (s) {
    case PageState::kUnmapped: return counts_.unmapped;
    case PageState::kMapped: return counts_.mapped;
    case PageState::kAllocated: return counts_.allocated;
    case PageState::kCached: return counts_.cached;
    case PageState::kTrimPending: return counts_.trim_pending;
  }
  return counts_.unmapped;
}

std::optional<Region> PagePool::find_region(RegionHandle handle) const {
  auto it = regions_.find(handle);
  if (it == regions_.end()) return std::nullopt;
  return Region{handle, it->second.start, it->second.len};
}

Region PagePool::reserve(PageCount len, bool prefer_cached) {
  if (len == 0) throw SimError(ErrorKind::kInvalidArgument, "reserve of zero pages");
  std::optional<PageIndex> start;
  if (prefer_cached) {
    // Cached pages are never owned while the pool is at rest, so every
    // cached run lies inside a free run.
    auto it = cached_by_len_.lower_bound({len, 0});
    if (it != cached_by_len_.end()) start = it->second;
  }
  if (!start) {
    for (const auto& [s, l] : free_) {
      if (l >= len) {
        start = s;
        break;
      }
    }
  }
  if (!start) {
    throw SimError(ErrorKind::kOutOfSpace,
                   "no free run of " + std::to_string(len) + " pages");
  }
  take_free(*start, len);
  const RegionHandle handle{next_handle_++};
  regions_.emplace(handle, RegionRecord{*start, len});
  return Region{handle, *start, len};
}

ReleaseResult PagePool::release(const Region& region, PageCount offset, PageCount len) {
  auto it = regions_.find(region.handle);
  if (it == regions_.end()) {
    throw SimError(ErrorKind::kInvalidArgument, "release of stale region handle");
  }
  const RegionRecord rec = it->second;
  if (len == 0 || offset > rec.len || len > rec.len - offset) {
    throw SimError(ErrorKind::kInvalidArgument, "release range outside region");
  }
  regions_.erase(it);

  ReleaseResult result;
  if (offset > 0) {
    const RegionHandle h{next_handle_++};
    regions_.emplace(h, RegionRecord{rec.start, offset});
    result.remainders.push_back(Region{h, rec.start, offset});
  }
  const PageCount tail = rec.len - offset - len;
  if (tail > 0) {
    const RegionHandle h{next_handle_++};
    const PageIndex tail_start = rec.start + offset + len;
    regions_.emplace(h, RegionRecord{tail_start, tail});
    result.remainders.push_back(Region{h, tail_start, tail});
  }
  add_free(rec.start + offset, len);
  result.freed.push_back(Run{rec.start + offset, len});
  return result;
}

void PagePool::add_free(PageIndex start, PageCount len) {
  auto next = free_.lower_bound(start);
  if (next != free_.begin()) {
    auto prev = std::prev(next);
    if (prev->first + prev->second == start) {
      start = prev->first;
      len += prev->second;
      free_.erase(prev);
    }
  }
  if (next != free_.end() && next->first == start + len) {
    len += next->second;
    free_.erase(next);
  }
  free_.emplace(start, len);
}

void PagePool::take_free(PageIndex start, PageCount len) {
  auto it = free_.upper_bound(start);
  --it;  // the run containing start; reserve only asks for covered ranges
  const PageIndex run_start = it->first;
  const PageCount run_len = it->second;
  free_.erase(it);
  if (start > run_start) free_.emplace(run_start, start - run_start);
  const PageIndex run_end = run_start + run_len;
  if (start + len < run_end) free_.emplace(start + len, run_end - (start + len));
}

void PagePool::add_cached_page(PageIndex page) {
  PageIndex start = page;
  PageCount len = 1;
  auto next = cached_.lower_bound(page);
  if (next != cached_.begin()) {
    auto prev = std::prev(next);
    if (prev->first + prev->second == page) {
      start = prev->first;
      len += prev->second;
      cached_by_len_.erase({prev->second, prev->first});
      cached_.erase(prev);
    }
  }
  if (next != cached_.end() && next->first == page + 1) {
    len += next->second;
    cached_by_len_.erase({next->second, next->first});
    cached_.erase(next);
  }
  cached_.emplace(start, len);
  cached_by_len_.emplace(len, start);
}

void PagePool::remove_cached_page(PageIndex page) {
  auto it = std::prev(cached_.upper_bound(page));
  const PageIndex start = it->first;
  const PageCount len = it->second;
  cached_by_len_.erase({len, start});
  cached_.erase(it);
  if (page > start) {
    cached_.emplace(start, page - start);
    cached_by_len_.emplace(page - start, start);
  }
  const PageIndex end = start + len;
  if (page + 1 < end) {
    cached_.emplace(page + 1, end - page - 1);
    cached_by_len_.emplace(end - page - 1, page + 1);
  }
}

void PagePool::transition(PageIndex page, PageState to) {
  if (to == PageState::kCached) {
    throw SimError(ErrorKind::kProtocolViolation, "use cache() to cache a page");
  }
  const PageState from = states_.at(page);
  if (!is_legal_transition(from, to)) {
    std::ostringstream os;
    os << "illegal page transition " << page_state_name(from) << " -> "
       << page_state_name(to) << " at page " << page;
    throw SimError(ErrorKind::kProtocolViolation, os.str());
  }
  if (from == PageState::kCached) {
    remove_cached_page(page);
    cached_fifo_.erase(cache_seq_[page]);
  }
  --count_for(from);
  ++count_for(to);
  states_[page] = to;
}

void PagePool::cache(PageIndex page, std::uint64_t free_seq) {
  const PageState from = states_.at(page);
  if (!is_legal_transition(from, PageState::kCached)) {
    throw SimError(ErrorKind::kProtocolViolation,
                   "illegal page transition " + std::string(page_state_name(from)) +
                       " -> cached at page " + std::to_string(page));
  }
  if (!cached_fifo_.emplace(free_seq, page).second) {
    throw SimError(ErrorKind::kInvalidArgument, "duplicate free sequence number");
  }
  cache_seq_[page] = free_seq;
  add_cached_page(page);
  --count_for(from);
  ++counts_.cached;
  states_[page] = PageState::kCached;
}

std::optional<PageIndex> PagePool::oldest_cached() const {
  if (cached_fifo_.empty()) return std::nullopt;
  return cached_fifo_.begin()->second;
}

std::vector<PageIndex> PagePool::cached_in_free_order() const {
  std::vector<PageIndex> out;
  out.reserve(cached_fifo_.size());
  for (const auto& [seq, page] : cached_fifo_) out.push_back(page);
  return out;
}

std::optional<std::string> PagePool::check_invariants() const {
  const PageCount n = size();
  if (counts_.total() != n) return "page counts do not sum to pool size";

  PoolCounts recount;
  for (PageState s : states_) {
    switch (s) {
      case PageState::kUnmapped: ++recount.unmapped; break;
      case PageState::kMapped: ++recount.mapped; break;
      case PageState::kAllocated: ++recount.allocated; break;
      case PageState::kCached: ++recount.cached; break;
      case PageState::kTrimPending: ++recount.trim_pending; break;
    }
  }
  if (!(recount == counts_)) return "incremental page counts drifted";

  std::vector<int> cover(n, 0);
  for (const auto& [h, r] : regions_) {
    if (r.len == 0 || r.start + r.len > n) return "region out of bounds";
    for (PageIndex p = r.start; p < r.start + r.len; ++p) ++cover[p];
  }
  PageIndex last_end = 0;
  bool first = true;
  for (const auto& [s, l] : free_) {
    if (l == 0 || s + l > n) return "free run out of bounds";
    if (!first && s <= last_end) return "free runs overlap or are not coalesced";
    first = false;
    last_end = s + l;
    for (PageIndex p = s; p < s + l; ++p) ++cover[p];
  }
  for (PageIndex p = 0; p < n; ++p) {
    if (cover[p] != 1) return "page " + std::to_string(p) + " covered " + std::to_string(cover[p]) + " times";
  }

  PageCount cached_pages = 0;
  first = true;
  for (const auto& [s, l] : cached_) {
    if (!first && s <= last_end) return "cached runs not maximal";
    first = false;
    last_end = s + l;
    for (PageIndex p = s; p < s + l; ++p) {
      if (states_[p] != PageState::kCached) return "cached run holds a non-cached page";
    }
    cached_pages += l;
  }
  if (cached_pages != counts_.cached || cached_fifo_.size() != counts_.cached ||
      cached_by_len_.size() != cached_.size()) {
    return "cached index out of sync with page states";
  }
  for (const auto& [seq, page] : cached_fifo_) {
    if (states_[page] != PageState::kCached || cache_seq_[page] != seq) {
      return "cache FIFO entry for a non-cached page";
    }
  }
  return std::nullopt;
}

}  // namespace edmm

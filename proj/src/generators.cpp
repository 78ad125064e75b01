#include "edmm/generators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <random>
#include <set>

#include "edmm/error.hpp"

namespace edmm {

namespace {

// Uniform-ish in [0, bound) from raw engine output; modulo bias does not
// matter for workload shaping and keeps the stream portable.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) { return bound == 0 ? 0 : rng() % bound; }

void require(bool ok, const char* msg) {
  if (!ok) throw SimError(ErrorKind::kInvalidArgument, msg);
}

struct LiveMapping {
  std::uint64_t ordinal;
  PageCount len;
};

class TraceBuilder {
 public:
  explicit TraceBuilder(Trace& t) : t_(t) {}

  std::uint64_t mmap(PageCount len) {
    t_.events.push_back(TraceEvent::mmap(len));
    return next_ordinal_++;
  }
  void access(std::uint64_t ord, PageCount off, PageCount len) {
    t_.events.push_back(TraceEvent::access(ord, off, len));
  }
  void munmap(std::uint64_t ord, PageCount off, PageCount len) {
    t_.events.push_back(TraceEvent::munmap(ord, off, len));
  }

 private:
  Trace& t_;
  std::uint64_t next_ordinal_ = 0;
};

}  // namespace

std::uint64_t churn_schedule_length(PageCount tree_pages) {
  return static_cast<std::uint64_t>(std::bit_width(tree_pages));
}

Trace gen_churn(const ChurnParams& params) {
  require(params.n_iters >= 1 && params.tree_pages >= 1 && params.live_sets >= 1,
          "churn parameters must be >= 1");
  std::mt19937_64 rng(params.seed);
  Trace t;
  t.header.name = "churn";
  t.header.seed = params.seed;
  t.header.pool_size = params.pool_pages != 0
                           ? params.pool_pages
                           : std::bit_ceil(2 * (params.live_sets + 1) * params.tree_pages);
  TraceBuilder b(t);

  const std::uint64_t schedule = churn_schedule_length(params.tree_pages);
  std::deque<LiveMapping> live;
  auto free_oldest = [&] {
    const LiveMapping old = live.front();
    live.pop_front();
    if (old.len >= 2 && draw(rng, 4) == 0) {
      // Release the tail first, then the rest: a partial munmap.
      const PageCount half = old.len / 2;
      b.munmap(old.ordinal, half, old.len - half);
      b.munmap(old.ordinal, 0, half);
    } else {
      b.munmap(old.ordinal, 0, old.len);
    }
  };

  for (std::uint64_t iter = 0; iter < params.n_iters; ++iter) {
    for (std::uint64_t k = 0; k < schedule; ++k) {
      const PageCount nominal = std::max<PageCount>(1, params.tree_pages >> k);
      const PageCount size = nominal - draw(rng, nominal / 4 + 1);
      const std::uint64_t ord = b.mmap(size);

      const PageCount chunk = std::max<PageCount>(1, size / 4);
      for (PageCount off = 0; off < size; off += chunk) b.access(ord, off, std::min(chunk, size - off));
      live.push_back({ord, size});

      // Marking pass over one older survivor.
      if (live.size() > 1) {
        const LiveMapping& m = live[draw(rng, live.size() - 1)];
        const PageCount off = draw(rng, m.len);
        b.access(m.ordinal, off, 1 + draw(rng, m.len - off));
      }
      while (live.size() > params.live_sets) free_oldest();
    }
  }
  while (!live.empty()) free_oldest();
  return t;
}

Trace gen_server(const ServerParams& params) {
  require(params.n_requests >= 1 && params.working_set_pages >= 1 && params.churn_period >= 1,
          "server parameters must be >= 1");
  std::mt19937_64 rng(params.seed);
  Trace t;
  t.header.name = "server";
  t.header.seed = params.seed;
  const PageCount scratch_bound = kServerMaxScratchPages * (kServerMaxScratchLive + 1);
  t.header.pool_size = params.pool_pages != 0
                           ? params.pool_pages
                           : (params.working_set_pages + scratch_bound + kServerSlabPages - 1) /
                                     kServerSlabPages * kServerSlabPages +
                                 kServerSlabPages;
  TraceBuilder b(t);

  std::vector<LiveMapping> slabs;
  for (PageCount done = 0; done < params.working_set_pages; done += kServerSlabPages) {
    const PageCount len = std::min(kServerSlabPages, params.working_set_pages - done);
    const std::uint64_t ord = b.mmap(len);
    b.access(ord, 0, len);
    slabs.push_back({ord, len});
  }

  std::deque<LiveMapping> scratch;
  for (std::uint64_t r = 0; r < params.n_requests; ++r) {
    const LiveMapping& s = slabs[draw(rng, slabs.size())];
    const PageCount off = draw(rng, s.len);
    b.access(s.ordinal, off, 1 + draw(rng, std::min<PageCount>(4, s.len - off)));

    if (draw(rng, params.churn_period) == 0) {
      const PageCount len = 1 + draw(rng, kServerMaxScratchPages);
      const std::uint64_t ord = b.mmap(len);
      b.access(ord, 0, len);
      scratch.push_back({ord, len});
      if (scratch.size() > kServerMaxScratchLive) {
        b.munmap(scratch.front().ordinal, 0, scratch.front().len);
        scratch.pop_front();
      }
    }
  }
  for (const auto& m : scratch) b.munmap(m.ordinal, 0, m.len);
  for (const auto& m : slabs) b.munmap(m.ordinal, 0, m.len);
  return t;
}

Trace gen_linear(const LinearParams& params) {
  require(params.total_pages >= 1, "total_pages must be >= 1");
  require(params.touch_fraction > 0.0 && params.touch_fraction <= 1.0, "touch fraction must be in (0, 1]");
  std::mt19937_64 rng(params.seed);
  Trace t;
  t.header.name = "linear";
  t.header.seed = params.seed;
  t.header.pool_size = params.pool_pages != 0 ? params.pool_pages : params.total_pages;
  TraceBuilder b(t);

  const std::uint64_t m = std::min<std::uint64_t>(1 + draw(rng, 4), params.total_pages);
  std::set<PageCount> cuts;
  while (cuts.size() + 1 < m) cuts.insert(1 + draw(rng, params.total_pages - 1));
  std::vector<PageCount> lens;
  PageIndex prev = 0;
  for (PageCount c : cuts) {
    lens.push_back(c - prev);
    prev = c;
  }
  lens.push_back(params.total_pages - prev);

  // Leading touch per mapping, apportioned so the total is exact.
  const auto total_touch = std::clamp<PageCount>(
      static_cast<PageCount>(std::llround(params.touch_fraction * static_cast<double>(params.total_pages))), 1,
      params.total_pages);
  std::vector<PageCount> touch(lens.size());
  std::vector<double> remainder(lens.size());
  PageCount assigned = 0;
  for (std::size_t i = 0; i < lens.size(); ++i) {
    const double exact = params.touch_fraction * static_cast<double>(lens[i]);
    touch[i] = std::min(lens[i], static_cast<PageCount>(std::floor(exact)));
    remainder[i] = exact - static_cast<double>(touch[i]);
    assigned += touch[i];
  }
  while (assigned < total_touch) {
    std::size_t best = lens.size();
    for (std::size_t i = 0; i < lens.size(); ++i) {
      if (touch[i] < lens[i] && (best == lens.size() || remainder[i] > remainder[best])) best = i;
    }
    ++touch[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  while (assigned > total_touch) {
    for (std::size_t i = lens.size(); i-- > 0 && assigned > total_touch;) {
      if (touch[i] > 0) {
        --touch[i];
        --assigned;
      }
    }
  }

  std::vector<std::uint64_t> ords;
  for (PageCount len : lens) ords.push_back(b.mmap(len));
  constexpr PageCount kChunk = 64;
  for (std::size_t i = 0; i < lens.size(); ++i) {
    for (PageCount off = 0; off < touch[i]; off += kChunk) b.access(ords[i], off, std::min(kChunk, touch[i] - off));
  }
  for (std::size_t i = 0; i < lens.size(); ++i) b.munmap(ords[i], 0, lens[i]);
  return t;
}

}  // namespace edmm

#include "edmm/page_pool.hpp"

#include <random>

#include "edmm/error.hpp"
#include "gtest/gtest.h"

namespace edmm {
namespace {

void expect_consistent(const PagePool& pool) {
  const auto bad = pool.check_invariants();
  EXPECT_FALSE(bad.has_value()) << *bad;
}

// Caches the given pages by walking them through Unmapped->Mapped->
// Allocated and then into the cache, after reserving and releasing them.
void make_cached(PagePool& pool, PageIndex start, PageCount len, std::uint64_t& seq) {
  for (PageIndex p = start; p < start + len; ++p) {
    pool.transition(p, PageState::kMapped);
    pool.transition(p, PageState::kAllocated);
    pool.cache(p, seq++);
  }
}

TEST(PagePoolTest, InitCoversWholePoolWithOneFreeRun) {
  PagePool pool(8);
  ASSERT_EQ(pool.free_runs().size(), 1u);
  EXPECT_EQ(pool.free_runs().begin()->first, 0u);
  EXPECT_EQ(pool.free_runs().begin()->second, 8u);
  EXPECT_EQ(pool.live_region_count(), 0u);
  EXPECT_EQ(pool.counts(), (PoolCounts{0, 0, 0, 8, 0}));
  expect_consistent(pool);
}

TEST(PagePoolTest, InitFiveHundredTwelveMegabytes) {
  PagePool pool(bytes_to_pages(512ULL << 20));
  EXPECT_EQ(pool.size(), 131072u);
}

TEST(PagePoolTest, InitZeroIsInvalid) {
  try {
    PagePool pool(0);
    FAIL() << "expected invalid-argument";
  } catch (const SimError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

TEST(PagePoolTest, ReserveIsFirstFitFromLowestAddress) {
  PagePool pool(8);
  const Region r = pool.reserve(4, false);
  EXPECT_EQ(r.start, 0u);
  EXPECT_EQ(r.len, 4u);
  EXPECT_TRUE(pool.is_live(r.handle));
  const Region s = pool.reserve(2, false);
  EXPECT_EQ(s.start, 4u);
  expect_consistent(pool);
}

TEST(PagePoolTest, ReserveBeyondPoolIsOutOfSpace) {
  PagePool pool(8);
  try {
    pool.reserve(9, false);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutOfSpace);
  }
}

TEST(PagePoolTest, PreferCachedPicksSmallestSufficientRun) {
  PagePool pool(32);
  std::uint64_t seq = 0;
  make_cached(pool, 10, 2, seq);
  make_cached(pool, 20, 3, seq);

  // Brute force: every maximal cached run, smallest length >= 2, lowest start.
  PageIndex expected = pool.size();
  PageCount best = ~PageCount{0};
  for (PageIndex p = 0; p < pool.size();) {
    if (pool.state(p) != PageState::kCached) {
      ++p;
      continue;
    }
    PageIndex q = p;
    while (q < pool.size() && pool.state(q) == PageState::kCached) ++q;
    if (q - p >= 2 && q - p < best) {
      best = q - p;
      expected = p;
    }
    p = q;
  }
  ASSERT_EQ(expected, 10u);

  const Region r = pool.reserve(2, true);
  EXPECT_EQ(r.start, 10u);
  const Region r3 = pool.reserve(3, true);
  EXPECT_EQ(r3.start, 20u);
}

TEST(PagePoolTest, PreferCachedFallsBackToFirstFit) {
  PagePool pool(32);
  std::uint64_t seq = 0;
  make_cached(pool, 10, 2, seq);
  const Region r = pool.reserve(4, true);
  EXPECT_EQ(r.start, 0u);
}

TEST(PagePoolTest, ReleaseWholeRegion) {
  PagePool pool(8);
  const Region r = pool.reserve(4, false);
  const ReleaseResult res = pool.release(r, 0, 4);
  ASSERT_EQ(res.freed.size(), 1u);
  EXPECT_EQ(res.freed[0], (edmm::Run{0, 4}));
  EXPECT_TRUE(res.remainders.empty());
  EXPECT_FALSE(pool.is_live(r.handle));
  EXPECT_EQ(pool.free_runs().size(), 1u);
  expect_consistent(pool);
}

TEST(PagePoolTest, ReleaseMiddleSplitsRegion) {
  PagePool pool(3);
  const Region r = pool.reserve(3, false);
  const ReleaseResult res = pool.release(r, 1, 1);
  ASSERT_EQ(res.freed.size(), 1u);
  EXPECT_EQ(res.freed[0], (edmm::Run{1, 1}));
  ASSERT_EQ(res.remainders.size(), 2u);
  EXPECT_EQ(res.remainders[0].start, 0u);
  EXPECT_EQ(res.remainders[0].len, 1u);
  EXPECT_EQ(res.remainders[1].start, 2u);
  EXPECT_EQ(res.remainders[1].len, 1u);
  EXPECT_NE(res.remainders[0].handle, r.handle);
  EXPECT_NE(res.remainders[1].handle, r.handle);
  expect_consistent(pool);
}

TEST(PagePoolTest, ReleaseOutOfRangeOrStaleIsInvalid) {
  PagePool pool(8);
  const Region r = pool.reserve(4, false);
  EXPECT_THROW(pool.release(r, 3, 2), SimError);
  pool.release(r, 0, 4);
  try {
    pool.release(r, 0, 1);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

TEST(PagePoolTest, HandlesAreNeverReused) {
  PagePool pool(4);
  const Region a = pool.reserve(4, false);
  pool.release(a, 0, 4);
  const Region b = pool.reserve(4, false);
  EXPECT_GT(static_cast<std::uint64_t>(b.handle), static_cast<std::uint64_t>(a.handle));
}

TEST(PagePoolTest, IllegalTransitionsAreRejected) {
  PagePool pool(4);
  EXPECT_THROW(pool.transition(0, PageState::kTrimPending), SimError);
  EXPECT_THROW(pool.cache(0, 0), SimError);
  EXPECT_THROW(pool.transition(0, PageState::kCached), SimError);
  pool.transition(0, PageState::kMapped);
  EXPECT_THROW(pool.transition(0, PageState::kUnmapped), SimError);
}

TEST(PagePoolTest, TransitionTable) {
  using S = PageState;
  EXPECT_TRUE(is_legal_transition(S::kUnmapped, S::kMapped));
  EXPECT_TRUE(is_legal_transition(S::kUnmapped, S::kAllocated));
  EXPECT_TRUE(is_legal_transition(S::kMapped, S::kAllocated));
  EXPECT_TRUE(is_legal_transition(S::kAllocated, S::kCached));
  EXPECT_TRUE(is_legal_transition(S::kAllocated, S::kTrimPending));
  EXPECT_TRUE(is_legal_transition(S::kCached, S::kAllocated));
  EXPECT_TRUE(is_legal_transition(S::kCached, S::kTrimPending));
  EXPECT_TRUE(is_legal_transition(S::kTrimPending, S::kUnmapped));
  EXPECT_FALSE(is_legal_transition(S::kUnmapped, S::kCached));
  EXPECT_FALSE(is_legal_transition(S::kCached, S::kUnmapped));
  EXPECT_FALSE(is_legal_transition(S::kTrimPending, S::kAllocated));
}

TEST(PagePoolTest, CountsAfterStaticStyleLoad) {
  PagePool pool(8);
  for (PageIndex p = 0; p < 8; ++p) pool.transition(p, PageState::kMapped);
  EXPECT_EQ(pool.counts(), (PoolCounts{8, 0, 0, 0, 0}));
  const Region r = pool.reserve(8, false);
  for (PageIndex p = r.start; p < r.end(); ++p) pool.transition(p, PageState::kAllocated);
  EXPECT_EQ(pool.counts().mapped + pool.counts().allocated, 8u);
}

TEST(PagePoolTest, OldestCachedFollowsFreeSequence) {
  PagePool pool(8);
  std::uint64_t seq = 0;
  make_cached(pool, 5, 1, seq);
  make_cached(pool, 2, 1, seq);
  EXPECT_EQ(pool.oldest_cached(), 5u);
  EXPECT_EQ(pool.cached_in_free_order(), (std::vector<PageIndex>{5, 2}));
  pool.transition(5, PageState::kTrimPending);
  EXPECT_EQ(pool.oldest_cached(), 2u);
  expect_consistent(pool);
}

// Random reserve/release/cache sequences keep every structural invariant
// and reserve is deterministic for equal pool states.
TEST(PagePoolTest, RandomOperationsPreserveInvariants) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 rng(seed);
    PagePool pool(64);
    PagePool twin(64);
    std::vector<Region> live;
    std::uint64_t seq = 0;
    for (int step = 0; step < 60; ++step) {
      const bool prefer = rng() % 2;
      if (live.empty() || rng() % 3 != 0) {
        const PageCount len = 1 + rng() % 12;
        try {
          const Region r = pool.reserve(len, prefer);
          const Region t = twin.reserve(len, prefer);
          ASSERT_EQ(r, t);
          for (PageIndex p = r.start; p < r.end(); ++p) {
            for (PagePool* pp : {&pool, &twin}) {
              const PageState s = pp->state(p);
              if (s == PageState::kUnmapped) pp->transition(p, PageState::kMapped);
              pp->transition(p, PageState::kAllocated);
            }
          }
          live.push_back(r);
        } catch (const SimError& e) {
          ASSERT_EQ(e.kind(), ErrorKind::kOutOfSpace);
          EXPECT_THROW(twin.reserve(len, prefer), SimError);
        }
      } else {
        const std::size_t i = rng() % live.size();
        const Region r = live[i];
        const PageCount off = rng() % r.len;
        const PageCount len = 1 + rng() % (r.len - off);
        const ReleaseResult a = pool.release(r, off, len);
        const ReleaseResult b = twin.release(r, off, len);
        ASSERT_EQ(a.remainders, b.remainders);
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
        live.insert(live.end(), a.remainders.begin(), a.remainders.end());
        const bool cache = rng() % 2;
        for (PageIndex p = r.start + off; p < r.start + off + len; ++p) {
          for (PagePool* pp : {&pool, &twin}) {
            if (cache) {
              pp->cache(p, seq);
            } else {
              pp->transition(p, PageState::kTrimPending);
              pp->transition(p, PageState::kUnmapped);
            }
          }
          ++seq;
        }
      }
      const auto bad = pool.check_invariants();
      ASSERT_FALSE(bad.has_value()) << "seed " << seed << ": " << *bad;
      ASSERT_EQ(pool.counts().total(), pool.size());
    }
  }
}

}  // namespace
}  // namespace edmm

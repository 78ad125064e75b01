#pragma once

#include <cstdint>

#include "edmm/trace.hpp"

namespace edmm {

// Synthetic workloads standing in for the three allocation-pattern classes:
// allocate/free churn, a steady key-value server, and over-provisioned
// mappings that are only partly touched. All are deterministic in the seed
// and only use raw std::mt19937_64 output, so traces are identical across
// standard libraries.

struct ChurnParams {
  std::uint64_t seed = 1;
  std::uint64_t n_iters = 8;
  PageCount tree_pages = 1024;
  std::uint64_t live_sets = 4;
  PageCount pool_pages = 0;  // 0 picks a pool with room for fragmentation
};

// Each iteration allocates one tree per size in the schedule
// tree_pages, tree_pages/2, ..., 1 (churn_schedule_length() entries), touches
// every page, re-touches a surviving tree, and frees the oldest trees so at
// most live_sets stay live. Every page is accessed before it is unmapped.
// Total mmap count is n_iters * churn_schedule_length(tree_pages).
Trace gen_churn(const ChurnParams& params);
std::uint64_t churn_schedule_length(PageCount tree_pages);

struct ServerParams {
  std::uint64_t seed = 1;
  std::uint64_t n_requests = 10000;
  PageCount working_set_pages = 4096;
  std::uint64_t churn_period = 16;  // about one small mmap per this many requests
  PageCount pool_pages = 0;
};

inline constexpr PageCount kServerSlabPages = 256;
inline constexpr PageCount kServerMaxScratchPages = 8;
inline constexpr std::uint64_t kServerMaxScratchLive = 8;

// Maps the working set in slabs, then serves requests that touch a few
// pages each; every churn_period requests on average a small scratch mapping
// is created and the oldest one beyond kServerMaxScratchLive is freed.
Trace gen_server(const ServerParams& params);

struct LinearParams {
  std::uint64_t seed = 1;
  PageCount total_pages = 1024;
  double touch_fraction = 1.0;
  PageCount pool_pages = 0;
};

// Splits total_pages into 1..4 mappings and touches the leading part of
// each sequentially; round(touch_fraction * total_pages) pages are touched
// overall. Everything is unmapped at the end.
Trace gen_linear(const LinearParams& params);

}  // namespace edmm

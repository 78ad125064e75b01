#pragma once

#include "edmm/config.hpp"
#include "edmm/cost_model.hpp"
#include "edmm/strategy.hpp"
#include "edmm/trace.hpp"

namespace edmm {

struct ReplayResult {
  Report report;
  TimeReport time;
};

// Loads the enclave for `config` on the trace's pool and drives every event
// through a Manager. Errors are rethrown with the failing event index.
//
// A munmap must cover pages the mapping still owns. An access may reach
// pages that were already unmapped; each such contiguous stretch goes to
// Manager::access through the stale region and either counts one POSIX
// warning or fails with use-after-free.
ReplayResult replay(const Trace& trace, const StrategyConfig& config, const CostParams& params,
                    Manager::EventSink sink = {});

}  // namespace edmm

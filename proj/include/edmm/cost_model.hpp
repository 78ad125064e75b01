#pragma once

#include <array>
#include <string>
#include <string_view>

#include "edmm/events.hpp"

namespace edmm {

// Per-event latencies in microseconds. The model is linear in the counters.
struct CostParams {
  std::array<double, kEventKindCount> event_us{};
  double zero_page_us = 0.0;    // zero-fill of a reused cached page
  double base_load_us = 0.0;    // fixed enclave creation overhead
  double access_page_us = 0.0;  // application work per touched page

  double latency(EventKind kind) const { return event_us[static_cast<std::size_t>(kind)]; }
  double& latency(EventKind kind) { return event_us[static_cast<std::size_t>(kind)]; }

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

struct TimeReport {
  double load_time_us = 0.0;
  double exec_time_us = 0.0;
};

// Calibrated so that a one-page demand fault (the five-switch path plus the
// kernel fault) costs 30 us and a plain process fault (syscall-style entry,
// fault handling, return) costs 8 us. config/costs.default holds the same
// numbers.
CostParams default_params();

// "name = microseconds" per line, '#' comments and blank lines allowed.
// Keys are the counter names (eenter, pf, eaug, ...) plus zero_page,
// base_load and access_page. Unknown keys, duplicates and negative values
// are rejected. Keys not present keep their value from `base`.
CostParams parse_cost_params(std::string_view text, const CostParams& base = default_params());
std::string serialize_cost_params(const CostParams& params);
CostParams load_cost_params(const std::string& path);

TimeReport modeled_time(const Counters& runtime, const Counters& load, const CostParams& params);

// Runtime-only part of the model: sum of count * latency plus reuse zeroing
// and application work.
double exec_time_us(const Counters& runtime, const CostParams& params);
double load_time_us(const Counters& load, const CostParams& params);

}  // namespace edmm

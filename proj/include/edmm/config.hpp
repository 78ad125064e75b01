#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "edmm/units.hpp"

namespace edmm {

enum class Mode : std::uint8_t {
  kStatic,      // whole pool added and measured at load
  kEdmm,        // pages added when mmap hands them out
  kEdmmDemand,  // pages added on first access
};

std::string_view mode_name(Mode mode);

// One point in the strategy grid. Fields that do not apply to the selected
// mode are ignored: static ignores everything but binary_pages, batch only
// affects kEdmm, demand_n only affects kEdmmDemand.
struct StrategyConfig {
  Mode mode = Mode::kEdmm;
  PageCount prealloc_pages = 0;
  bool batch = false;
  PageCount demand_n = 1;
  // Unset disables lazy free. A zero fraction still runs the cache path and
  // evicts every freed page immediately.
  std::optional<Fraction> lazy_free;
  PageCount binary_pages = 0;
  std::uint32_t enclave_threads = 1;

  // Throws invalid-argument when the config cannot run on a pool this size.
  void validate(PageCount pool_size) const;

  friend bool operator==(const StrategyConfig&, const StrategyConfig&) = default;
};

// Labels: "static", "edmm", "edmm+demand",
// modifiers "+demand=<N>", "+pre=<bytes>", "+batch", "+lf=<percent>".
// Parsing leaves binary_pages and enclave_threads at their defaults.
StrategyConfig parse_strategy_label(std::string_view label);
std::string strategy_label(const StrategyConfig& config);

}  // namespace edmm

#include "edmm/config.hpp"

#include <charconv>

#include "edmm/error.hpp"

namespace edmm {

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kStatic: return "static";
    case Mode::kEdmm: return "edmm";
    case Mode::kEdmmDemand: return "edmm+demand";
  }
  return "?";
}

void StrategyConfig::validate(PageCount pool_size) const {
  auto fail = [](const std::string& msg) { throw SimError(ErrorKind::kInvalidArgument, msg); };
  if (pool_size == 0) fail("pool_size must be >= 1");
  if (demand_n == 0) fail("demand_n must be >= 1");
  if (enclave_threads == 0) fail("enclave_threads must be >= 1");
  if (lazy_free && (lazy_free->den == 0 || lazy_free->num > lazy_free->den)) {
    fail("lazy-free fraction must be in [0, 1]");
  }
  if (binary_pages > pool_size) fail("binary pages exceed pool size");
  if (mode != Mode::kStatic && prealloc_pages > pool_size - binary_pages) {
    fail("binary + pre-allocated pages exceed pool size");
  }
}

StrategyConfig parse_strategy_label(std::string_view label) {
  auto fail = [&](const std::string& why) {
    throw SimError(ErrorKind::kInvalidArgument,
                   "bad strategy '" + std::string(label) + "': " + why);
  };

  StrategyConfig cfg;
  std::string_view rest;
  if (label.starts_with("static")) {
    cfg.mode = Mode::kStatic;
    rest = label.substr(6);
  } else if (label.starts_with("edmm")) {
    cfg.mode = Mode::kEdmm;
    rest = label.substr(4);
  } else {
    fail("must start with static or edmm");
  }

  bool seen_demand = false, seen_pre = false, seen_lf = false;
  while (!rest.empty()) {
    if (rest.front() != '+') fail("expected '+'");
    rest.remove_prefix(1);
    const auto next = rest.find('+');
    const std::string_view mod = rest.substr(0, next);
    rest.remove_prefix(next == std::string_view::npos ? rest.size() : next);

    const auto eq = mod.find('=');
    const std::string_view key = mod.substr(0, eq);
    const std::string_view value = eq == std::string_view::npos ? std::string_view{} : mod.substr(eq + 1);
    if (eq != std::string_view::npos && value.empty()) fail("empty value for " + std::string(key));

    if (cfg.mode == Mode::kStatic) fail("static takes no modifiers");
    if (key == "demand") {
      if (seen_demand) fail("duplicate +demand");
      seen_demand = true;
      cfg.mode = Mode::kEdmmDemand;
      if (!value.empty()) {
        PageCount n = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
        if (ec != std::errc() || p != value.data() + value.size() || n == 0) fail("demand N must be >= 1");
        cfg.demand_n = n;
      }
    } else if (key == "pre") {
      if (seen_pre) fail("duplicate +pre");
      seen_pre = true;
      if (value.empty()) fail("+pre needs a size");
      cfg.prealloc_pages = bytes_to_pages(parse_size_bytes(value));
    } else if (key == "batch") {
      if (cfg.batch) fail("duplicate +batch");
      if (!value.empty()) fail("+batch takes no value");
      cfg.batch = true;
    } else if (key == "lf") {
      if (seen_lf) fail("duplicate +lf");
      seen_lf = true;
      if (value.empty()) fail("+lf needs a percent");
      cfg.lazy_free = parse_percent(value);
    } else {
      fail("unknown modifier '" + std::string(key) + "'");
    }
  }
  if (cfg.batch && cfg.mode == Mode::kEdmmDemand) fail("+batch does not combine with +demand");
  return cfg;
}

std::string strategy_label(const StrategyConfig& config) {
  if (config.mode == Mode::kStatic) return "static";
  std::string out = "edmm";
  if (config.mode == Mode::kEdmmDemand) {
    out += "+demand";
    if (config.demand_n != 1) out += "=" + std::to_string(config.demand_n);
  }
  if (config.prealloc_pages > 0) out += "+pre=" + format_size_bytes(config.prealloc_pages * kPageSize);
  if (config.batch && config.mode == Mode::kEdmm) out += "+batch";
  if (config.lazy_free) out += "+lf=" + format_percent(*config.lazy_free);
  return out;
}

}  // namespace edmm

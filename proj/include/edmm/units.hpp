#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace edmm {

using PageIndex = std::uint64_t;
using PageCount = std::uint64_t;

inline constexpr std::uint64_t kPageSize = 4096;

constexpr PageCount bytes_to_pages(std::uint64_t bytes) {
  return (bytes + kPageSize - 1) / kPageSize;
}

// Parses "4096", "16K", "64M", "1G" (binary multiples) into bytes.
std::uint64_t parse_size_bytes(std::string_view text);

// Inverse of parse_size_bytes for display: largest exact suffix, e.g. 64M.
std::string format_size_bytes(std::uint64_t bytes);

// Exact non-negative rational, used for lazy-free thresholds so that
// floor(fraction * pool) never depends on floating-point rounding.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  bool is_zero() const { return num == 0; }
  std::uint64_t floor_times(std::uint64_t n) const;
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return static_cast<unsigned __int128>(a.num) * b.den ==
           static_cast<unsigned __int128>(b.num) * a.den;
  }
};

// "15" -> 15/100, "12.5" -> 125/1000. Rejects negatives and values > 100.
Fraction parse_percent(std::string_view text);
std::string format_percent(const Fraction& f);

}  // namespace edmm

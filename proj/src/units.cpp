#include "edmm/units.hpp"

#include <charconv>
#include <numeric>

#include "edmm/error.hpp"

namespace edmm {

namespace {

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw SimError(ErrorKind::kInvalidArgument,
                   "bad " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::uint64_t parse_size_bytes(std::string_view text) {
  if (text.empty()) throw SimError(ErrorKind::kInvalidArgument, "empty size");
  std::uint64_t mult = 1;
  switch (text.back()) {
    case 'k': case 'K': mult = 1ULL << 10; break;
    case 'm': case 'M': mult = 1ULL << 20; break;
    case 'g': case 'G': mult = 1ULL << 30; break;
    default: break;
  }
  if (mult != 1) text.remove_suffix(1);
  const std::uint64_t v = parse_u64(text, "size");
  if (v > UINT64_MAX / mult) throw SimError(ErrorKind::kInvalidArgument, "size overflow");
  return v * mult;
}

std::string format_size_bytes(std::uint64_t bytes) {
  if (bytes != 0) {
    if (bytes % (1ULL << 30) == 0) return std::to_string(bytes >> 30) + "G";
    if (bytes % (1ULL << 20) == 0) return std::to_string(bytes >> 20) + "M";
    if (bytes % (1ULL << 10) == 0) return std::to_string(bytes >> 10) + "K";
  }
  return std::to_string(bytes);
}

std::uint64_t Fraction::floor_times(std::uint64_t n) const {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(num) * n / den);
}

Fraction parse_percent(std::string_view text) {
  const auto dot = text.find('.');
  std::string digits(text.substr(0, dot));
  std::uint64_t den = 100;
  if (dot != std::string_view::npos) {
    const auto frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) {
      throw SimError(ErrorKind::kInvalidArgument, "bad percent: '" + std::string(text) + "'");
    }
    digits += frac;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  }
  Fraction f{parse_u64(digits, "percent"), den};
  if (f.num > f.den) {
    throw SimError(ErrorKind::kInvalidArgument, "percent above 100: '" + std::string(text) + "'");
  }
  const auto g = std::gcd(f.num, f.den);
  if (g > 1) {
    f.num /= g;
    f.den /= g;
  }
  return f;
}

std::string format_percent(const Fraction& f) {
  // Percent value num*100/den printed with as many decimals as needed (<= 9).
  const unsigned __int128 scaled = static_cast<unsigned __int128>(f.num) * 100;
  const auto whole = static_cast<std::uint64_t>(scaled / f.den);
  unsigned __int128 rem = scaled % f.den;
  std::string out = std::to_string(whole);
  if (rem == 0) return out;
  out += '.';
  for (int i = 0; i < 9 && rem != 0; ++i) {
    rem *= 10;
    out += static_cast<char>('0' + static_cast<int>(rem / f.den));
    rem %= f.den;
  }
  return out;
}

}  // namespace edmm

#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace voxkit {

// Exact decimal value: (-1)^negative * digits * 10^exponent.
// digits has no leading or trailing zeros; zero is the empty digit string.
struct Decimal {
  bool negative = false;
  std::string digits;
  std::int64_t exponent = 0;

  bool is_zero() const noexcept { return digits.empty(); }
  friend bool operator==(const Decimal&, const Decimal&) = default;
};

// Accepts [+-]? (d+ (. d*)? | . d+) ([eE] [+-]? d+)?, nothing else (no
// surrounding whitespace, no hex, no inf/nan).
inline std::optional<Decimal> parse_decimal(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool negative = false;
  if (i < n && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string mantissa;
  std::int64_t frac_digits = 0;
  bool saw_digit = false;
  while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
    mantissa.push_back(text[i++]);
    saw_digit = true;
  }
  if (i < n && text[i] == '.') {
    ++i;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
      mantissa.push_back(text[i++]);
      ++frac_digits;
      saw_digit = true;
    }
  }
  if (!saw_digit) return std::nullopt;

  std::int64_t exp10 = 0;
  if (i < n && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < n && (text[i] == '+' || text[i] == '-')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    std::size_t exp_start = i;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (i - exp_start >= 15) return std::nullopt;  // absurd exponent
      exp10 = exp10 * 10 + (text[i] - '0');
      ++i;
    }
    if (i == exp_start) return std::nullopt;
    if (exp_negative) exp10 = -exp10;
  }
  if (i != n) return std::nullopt;

  Decimal d;
  std::size_t first = mantissa.find_first_not_of('0');
  if (first == std::string::npos) return d;  // zero, sign dropped
  std::size_t last = mantissa.find_last_not_of('0');
  d.digits = mantissa.substr(first, last - first + 1);
  const auto trailing = static_cast<std::int64_t>(mantissa.size() - 1 - last);
  d.exponent = exp10 - frac_digits + trailing;
  d.negative = negative;
  return d;
}

inline bool is_decimal(std::string_view text) { return parse_decimal(text).has_value(); }

// True when both texts are decimals with the same exact value.
inline bool decimal_equal(std::string_view a, std::string_view b) {
  auto x = parse_decimal(a);
  auto y = parse_decimal(b);
  return x && y && *x == *y;
}

// Canonical spelling used for hashing / sorting equal values together.
inline std::string canonical_decimal(const Decimal& d) {
  if (d.is_zero()) return "0";
  std::string out = d.negative ? "-" : "";
  out += d.digits;
  if (d.exponent != 0) out += "e" + std::to_string(d.exponent);
  return out;
}

}  // namespace voxkit

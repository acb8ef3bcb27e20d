#ifndef DSAUDIT_DECIMAL_HPP
#define DSAUDIT_DECIMAL_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dsaudit {

// Exact decimal number: mantissa * 10^-exponent, with 0 <= exponent <= 18.
// Always normalized (no trailing zeros in the mantissa unless exponent == 0),
// so structural equality is numeric equality.
class Decimal {
 public:
  static constexpr int kMaxExponent = 18;

  constexpr Decimal() = default;
  constexpr Decimal(std::int64_t integer) : mantissa_(integer) {}  // NOLINT

  static Decimal from_parts(std::int64_t mantissa, int exponent) {
    return normalized(mantissa, exponent);
  }

  // Accepts [+-]digits[.digits][(e|E)[+-]digits]. Returns nullopt on syntax
  // error or when the value is not representable.
  static std::optional<Decimal> parse(std::string_view text) {
    std::size_t pos = 0;
    bool negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      negative = text[pos] == '-';
      ++pos;
    }
    __int128 mantissa = 0;
    int exponent = 0;
    bool any_digit = false;
    bool seen_point = false;
    for (; pos < text.size(); ++pos) {
      char c = text[pos];
      if (c >= '0' && c <= '9') {
        any_digit = true;
        mantissa = mantissa * 10 + (c - '0');
        if (seen_point) ++exponent;
        if (mantissa > kLimit) return std::nullopt;
      } else if (c == '.' && !seen_point) {
        seen_point = true;
      } else {
        break;
      }
    }
    if (!any_digit) return std::nullopt;
    if (pos < text.size()) {
      if (text[pos] != 'e' && text[pos] != 'E') return std::nullopt;
      ++pos;
      bool exp_negative = false;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        exp_negative = text[pos] == '-';
        ++pos;
      }
      if (pos == text.size()) return std::nullopt;
      int shift = 0;
      for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (c < '0' || c > '9') return std::nullopt;
        shift = shift * 10 + (c - '0');
        if (shift > 64) return std::nullopt;
      }
      exponent += exp_negative ? shift : -shift;
    }
    while (exponent < 0) {
      mantissa *= 10;
      ++exponent;
      if (mantissa > kLimit) return std::nullopt;
    }
    while (exponent > 0 && mantissa % 10 == 0) {
      mantissa /= 10;
      --exponent;
    }
    if (exponent > kMaxExponent) return std::nullopt;
    Decimal d;
    d.mantissa_ = static_cast<std::int64_t>(negative ? -mantissa : mantissa);
    d.exponent_ = exponent;
    return d;
  }

  std::int64_t mantissa() const { return mantissa_; }
  int exponent() const { return exponent_; }

  std::string to_string() const {
    bool negative = mantissa_ < 0;
    auto magnitude = static_cast<unsigned long long>(
        negative ? -static_cast<__int128>(mantissa_) : static_cast<__int128>(mantissa_));
    std::string digits = std::to_string(magnitude);
    if (exponent_ > 0) {
      if (static_cast<int>(digits.size()) <= exponent_) {
        digits.insert(0, static_cast<std::size_t>(exponent_ - static_cast<int>(digits.size()) + 1), '0');
      }
      digits.insert(digits.size() - static_cast<std::size_t>(exponent_), ".");
    }
    return negative ? "-" + digits : digits;
  }

  // Exact (a + b) / 2.
  Decimal midpoint(const Decimal& other) const {
    int e = std::max(exponent_, other.exponent_);
    __int128 sum = scaled(e) + other.scaled(e);
    return from_wide(sum * 5, e + 1);
  }

  Decimal operator+(const Decimal& other) const {
    int e = std::max(exponent_, other.exponent_);
    return from_wide(scaled(e) + other.scaled(e), e);
  }
  Decimal operator-(const Decimal& other) const {
    int e = std::max(exponent_, other.exponent_);
    return from_wide(scaled(e) - other.scaled(e), e);
  }

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    int e = std::max(a.exponent_, b.exponent_);
    __int128 x = a.scaled(e);
    __int128 y = b.scaled(e);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  static constexpr __int128 kLimit = static_cast<__int128>(INT64_MAX);

  __int128 scaled(int exponent) const {
    __int128 v = mantissa_;
    for (int k = exponent_; k < exponent; ++k) v *= 10;
    return v;
  }

  static Decimal from_wide(__int128 mantissa, int exponent) {
    while (exponent > 0 && mantissa % 10 == 0) {
      mantissa /= 10;
      --exponent;
    }
    if (exponent > kMaxExponent || mantissa > kLimit || mantissa < -kLimit) {
      throw std::overflow_error("decimal value out of representable range");
    }
    Decimal d;
    d.mantissa_ = static_cast<std::int64_t>(mantissa);
    d.exponent_ = exponent;
    return d;
  }

  static Decimal normalized(std::int64_t mantissa, int exponent) {
    if (exponent < 0) {
      __int128 m = mantissa;
      for (; exponent < 0; ++exponent) m *= 10;
      return from_wide(m, 0);
    }
    return from_wide(mantissa, exponent);
  }

  std::int64_t mantissa_ = 0;
  int exponent_ = 0;
};

}  // namespace dsaudit

#endif  // DSAUDIT_DECIMAL_HPP

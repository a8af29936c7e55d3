#include "core/numeric.hpp"

#include <cctype>
#include <limits>
#include <numeric>

#include "core/error.hpp"

namespace tell {

namespace {

std::int64_t narrow(__int128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
    throw Error(ErrorCode::InvalidArgument, "rational arithmetic overflow");
  }
  return static_cast<std::int64_t>(v);
}

std::pair<std::int64_t, std::int64_t> reduce(__int128 num, __int128 den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return {narrow(num), narrow(den)};
}

Rational make(__int128 num, __int128 den) {
  auto [n, d] = reduce(num, den);
  return Rational(n, d);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Parses [-]digits[.digits] with optional thousands commas in the integer part.
std::optional<Decimal> parse_plain_decimal(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  __int128 units = 0;
  int scale = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      units = units * 10 + (c - '0');
      if (units > std::numeric_limits<std::int64_t>::max()) return std::nullopt;
      if (seen_point) ++scale;
      seen_digit = true;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c == ',' && !seen_point && seen_digit) {
      // thousands separator must be followed by exactly three digits
      if (i + 3 >= s.size()) return std::nullopt;
      for (std::size_t k = 1; k <= 3; ++k) {
        if (!std::isdigit(static_cast<unsigned char>(s[i + k]))) return std::nullopt;
      }
      if (i + 4 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 4]))) return std::nullopt;
    } else {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  if (seen_point && scale == 0) return std::nullopt;
  if (scale > 18) return std::nullopt;
  return Decimal{static_cast<std::int64_t>(negative ? -units : units), scale};
}

}  // namespace

std::int64_t pow10(int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= 10;
  return r;
}

Rational::Rational(std::int64_t num, std::int64_t den) {
  auto [n, d] = reduce(num, den);
  num_ = n;
  den_ = d;
}

Rational Rational::operator+(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_,
              static_cast<__int128>(den_) * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.den_ - static_cast<__int128>(o.num_) * den_,
              static_cast<__int128>(den_) * o.den_);
}

Rational Rational::operator*(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.num_, static_cast<__int128>(den_) * o.den_);
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num_ == 0) throw Error(ErrorCode::InvalidArgument, "division by zero");
  return make(static_cast<__int128>(num_) * o.den_, static_cast<__int128>(den_) * o.num_);
}

std::strong_ordering Rational::operator<=>(const Rational& o) const noexcept {
  __int128 lhs = static_cast<__int128>(num_) * o.den_;
  __int128 rhs = static_cast<__int128>(o.num_) * den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::optional<Rational> Rational::parse(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    auto lhs = parse_plain_decimal(trim(text.substr(0, slash)));
    auto rhs = parse_plain_decimal(trim(text.substr(slash + 1)));
    if (!lhs || !rhs) return std::nullopt;
    Rational d = rhs->value();
    if (d.num() == 0) return std::nullopt;
    return lhs->value() / d;
  }
  bool negative = false;
  if (text.size() > 1 && text.front() == '-' && text[1] == '$') {
    negative = true;
    text.remove_prefix(2);
  }
  auto dec = parse_plain_decimal(text);
  if (!dec) return std::nullopt;
  Rational r = dec->value();
  return negative ? Rational(0) - r : r;
}

Rational Decimal::value() const { return Rational(units, pow10(scale)); }

std::string Decimal::to_string() const {
  std::int64_t p = pow10(scale);
  std::int64_t a = units < 0 ? -units : units;
  std::string out = units < 0 ? "-" : "";
  out += std::to_string(a / p);
  if (scale > 0) {
    std::string frac = std::to_string(a % p);
    out += '.';
    out.append(static_cast<std::size_t>(scale) - frac.size(), '0');
    out += frac;
  }
  return out;
}

std::string Decimal::to_currency() const {
  Decimal d = scale < 2 ? rescaled(2) : *this;
  if (d.scale > 2) d = from_rational(d.value(), 2);
  std::string s = d.to_string();
  if (!s.empty() && s.front() == '-') return "-$" + s.substr(1);
  return "$" + s;
}

Decimal Decimal::rescaled(int new_scale) const {
  if (new_scale < scale) return from_rational(value(), new_scale);
  return Decimal{units * pow10(new_scale - scale), new_scale};
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  text = trim(text);
  if (text.empty() || text.find(',') != std::string_view::npos) return std::nullopt;
  return parse_plain_decimal(text);
}

Decimal Decimal::from_rational(const Rational& r, int scale) {
  Rational scaled = r * Rational(pow10(scale));
  if (!scaled.is_integer()) {
    throw Error(ErrorCode::InvalidArgument,
                "value " + r.to_string() + " is not representable at scale " + std::to_string(scale));
  }
  return Decimal{scaled.num(), scale};
}

}  // namespace tell

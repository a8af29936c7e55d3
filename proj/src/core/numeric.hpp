#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tell {

// Exact rational with a positive denominator, always in lowest terms.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(implicit)
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  bool is_integer() const noexcept { return den_ == 1; }

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;

  bool operator==(const Rational& o) const noexcept = default;
  std::strong_ordering operator<=>(const Rational& o) const noexcept;

  // "p/q", or "p" when the denominator is 1.
  std::string to_string() const;

  // Accepts "12", "-3", "1,234", "2.750", "$2.75", "3/4", "-$1.50".
  // Leading/trailing whitespace is ignored. Returns nullopt for anything else.
  static std::optional<Rational> parse(std::string_view text);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Exact decimal: units / 10^scale. Keeps its declared scale for formatting.
struct Decimal {
  std::int64_t units = 0;
  int scale = 0;

  Rational value() const;
  // Fixed-point text at the declared scale, e.g. {275, 2} -> "2.75".
  std::string to_string() const;
  // "$X.YY" form, scale forced to 2.
  std::string to_currency() const;

  // Re-express at a (larger or equal) scale; throws if precision would be lost.
  Decimal rescaled(int new_scale) const;

  static std::optional<Decimal> parse(std::string_view text);
  static Decimal from_rational(const Rational& r, int scale);

  bool operator==(const Decimal& o) const noexcept = default;
};

std::int64_t pow10(int exp);

}  // namespace tell

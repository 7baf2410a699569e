#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace tablerouter {

using BigInt = boost::multiprecision::cpp_int;

// Exact base-10 number: units * 10^-scale. No binary floating point anywhere.
class Decimal {
 public:
  Decimal() = default;
  Decimal(BigInt units, unsigned scale) : units_(std::move(units)), scale_(scale) {}
  static Decimal from_integer(long long v) { return Decimal(BigInt(v), 0); }

  const BigInt& units() const { return units_; }
  unsigned scale() const { return scale_; }
  bool is_negative() const { return units_ < 0; }
  bool is_zero() const { return units_ == 0; }

  // Same value at a larger scale; never loses digits.
  Decimal rescaled(unsigned scale) const;
  // Drops trailing fractional zeros.
  Decimal reduced() const;

  Decimal operator-() const { return Decimal(-units_, scale_); }
  friend Decimal operator+(const Decimal& a, const Decimal& b);
  friend Decimal operator-(const Decimal& a, const Decimal& b);
  Decimal& operator+=(const Decimal& o) { return *this = *this + o; }

  // Value comparison: 1.5 == 1.50.
  friend bool operator==(const Decimal& a, const Decimal& b);
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

  // Plain dot-decimal rendering at the stored scale, e.g. "-2.50".
  std::string to_string() const;

 private:
  BigInt units_ = 0;
  unsigned scale_ = 0;
};

enum class Convention { comma_decimal, dot_decimal };

std::string_view to_string(Convention c);
std::optional<Convention> convention_from_string(std::string_view s);

struct Amount {
  Decimal value;
  std::string source;
  // Absent when the text carries no decimal or grouping mark ("42").
  std::optional<Convention> convention;

  unsigned scale() const { return value.scale(); }
};

std::optional<Amount> parse_amount(std::string_view text);

std::string format_amount(const Decimal& value, Convention convention, unsigned min_scale);
inline std::string format_amount(const Amount& a, Convention convention, unsigned min_scale) {
  return format_amount(a.value, convention, min_scale);
}

// Majority convention among the parseable cells; ties and no evidence give
// comma-decimal.
Convention detect_convention(std::span<const std::string> cells);

}  // namespace tablerouter

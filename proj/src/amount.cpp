#include "tablerouter/amount.hpp"

#include "tablerouter/text.hpp"

#include <array>
#include <vector>

namespace tablerouter {
namespace {

BigInt pow10(unsigned n) {
  BigInt r = 1;
  for (unsigned i = 0; i < n; ++i) r *= 10;
  return r;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && text::iequals_ascii(s.substr(0, prefix.size()), prefix);
}

bool ends_with_ci(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         text::iequals_ascii(s.substr(s.size() - suffix.size()), suffix);
}

constexpr std::array<std::string_view, 3> kEdgeMarks = {"€", "EUR", "%"};

// Strips currency/percent marks and whitespace from both ends until stable.
std::string strip_edge_marks(std::string s) {
  for (bool changed = true; changed;) {
    changed = false;
    std::string t = text::trim(s);
    if (t != s) {
      s = std::move(t);
      changed = true;
    }
    for (std::string_view mark : kEdgeMarks) {
      if (starts_with_ci(s, mark)) {
        s.erase(0, mark.size());
        changed = true;
      }
      if (ends_with_ci(s, mark)) {
        s.erase(s.size() - mark.size());
        changed = true;
      }
    }
  }
  return s;
}

enum class SepKind { space, comma, dot };

struct Token {
  bool is_digits;
  std::string digits;  // when is_digits
  SepKind sep{};       // otherwise
};

// Splits the numeric body into alternating digit runs and single separators.
std::optional<std::vector<Token>> tokenize(std::string_view s) {
  std::vector<Token> out;
  for (size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (c >= '0' && c <= '9') {
      if (out.empty() || !out.back().is_digits) out.push_back(Token{true, {}, {}});
      out.back().digits.push_back(c);
      ++i;
      continue;
    }
    SepKind kind;
    size_t len = 1;
    if (c == ',') {
      kind = SepKind::comma;
    } else if (c == '.') {
      kind = SepKind::dot;
    } else if (c == ' ') {
      kind = SepKind::space;
    } else if (s.substr(i, 2) == "\xC2\xA0") {
      kind = SepKind::space;
      len = 2;
    } else if (s.substr(i, 3) == "\xE2\x80\xAF" || s.substr(i, 3) == "\xE2\x80\x89") {
      kind = SepKind::space;
      len = 3;
    } else {
      return std::nullopt;
    }
    // Two separators in a row are never part of a number.
    if (!out.empty() && !out.back().is_digits) return std::nullopt;
    out.push_back(Token{false, {}, kind});
    i += len;
  }
  return out;
}

}  // namespace

Decimal Decimal::rescaled(unsigned scale) const {
  if (scale <= scale_) return *this;
  return Decimal(units_ * pow10(scale - scale_), scale);
}

Decimal Decimal::reduced() const {
  Decimal d = *this;
  while (d.scale_ > 0 && d.units_ % 10 == 0) {
    d.units_ /= 10;
    --d.scale_;
  }
  return d;
}

Decimal operator+(const Decimal& a, const Decimal& b) {
  const unsigned s = std::max(a.scale_, b.scale_);
  return Decimal(a.rescaled(s).units_ + b.rescaled(s).units_, s);
}

Decimal operator-(const Decimal& a, const Decimal& b) { return a + (-b); }

bool operator==(const Decimal& a, const Decimal& b) {
  const unsigned s = std::max(a.scale_, b.scale_);
  return a.rescaled(s).units_ == b.rescaled(s).units_;
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  const unsigned s = std::max(a.scale_, b.scale_);
  const BigInt& x = a.rescaled(s).units_;
  const BigInt& y = b.rescaled(s).units_;
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Decimal::to_string() const { return format_amount(*this, Convention::dot_decimal, 0); }

std::string_view to_string(Convention c) {
  return c == Convention::comma_decimal ? "comma-decimal" : "dot-decimal";
}

std::optional<Convention> convention_from_string(std::string_view s) {
  if (s == "comma-decimal" || s == "comma") return Convention::comma_decimal;
  if (s == "dot-decimal" || s == "dot") return Convention::dot_decimal;
  return std::nullopt;
}

std::optional<Amount> parse_amount(std::string_view raw) {
  std::string s = strip_edge_marks(std::string(raw));
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s.erase(0, 1);
  } else if (s.rfind("\xE2\x88\x92", 0) == 0) {  // U+2212 minus sign
    negative = true;
    s.erase(0, 3);
  }
  s = strip_edge_marks(std::move(s));
  if (s.empty()) return std::nullopt;

  auto tokens = tokenize(s);
  if (!tokens || tokens->empty()) return std::nullopt;
  auto& toks = *tokens;
  if (!toks.back().is_digits) return std::nullopt;

  // Decimal mark: the rightmost comma/dot, if it is the last separator and is
  // followed by one or two digits.
  std::optional<size_t> mark;
  for (size_t i = toks.size(); i-- > 0;) {
    if (toks[i].is_digits) continue;
    if (toks[i].sep == SepKind::space) break;
    const std::string& trailing = toks[i + 1].digits;
    if (i + 2 == toks.size() && (trailing.size() == 1 || trailing.size() == 2)) mark = i;
    break;
  }

  const size_t int_end = mark ? *mark : toks.size();
  std::optional<SepKind> group_punct;
  std::string digits;
  size_t groups = 0;
  for (size_t i = 0; i < int_end; ++i) {
    if (toks[i].is_digits) {
      ++groups;
      digits += toks[i].digits;
      continue;
    }
    const SepKind k = toks[i].sep;
    if (k != SepKind::space) {
      if (mark && k == toks[*mark].sep) return std::nullopt;
      if (group_punct && *group_punct != k) return std::nullopt;
      group_punct = k;
    }
  }
  if (groups == 0 && !mark) return std::nullopt;
  if (int_end > 0 && !toks[0].is_digits) return std::nullopt;
  if (groups > 1) {
    // Grouped integer part: 1-3 leading digits without a leading zero, then
    // groups of exactly three.
    bool first = true;
    for (size_t i = 0; i < int_end; ++i) {
      if (!toks[i].is_digits) continue;
      const size_t n = toks[i].digits.size();
      if (first ? (n == 0 || n > 3 || toks[i].digits[0] == '0') : n != 3) return std::nullopt;
      first = false;
    }
  }

  unsigned scale = 0;
  if (mark) {
    digits += toks[*mark + 1].digits;
    scale = static_cast<unsigned>(toks[*mark + 1].digits.size());
  }
  if (digits.empty()) return std::nullopt;

  Amount a;
  // cpp_int reads a leading zero as an octal prefix.
  const size_t nz = digits.find_first_not_of('0');
  const BigInt units(nz == std::string::npos ? std::string("0") : digits.substr(nz));
  a.value = Decimal(negative ? BigInt(-units) : units, scale);
  a.source = std::string(raw);
  if (mark) {
    a.convention = toks[*mark].sep == SepKind::comma ? Convention::comma_decimal
                                                      : Convention::dot_decimal;
  } else if (group_punct) {
    a.convention = *group_punct == SepKind::dot ? Convention::comma_decimal
                                                : Convention::dot_decimal;
  }
  return a;
}

std::string format_amount(const Decimal& value, Convention convention, unsigned min_scale) {
  const Decimal d = value.rescaled(std::max(value.scale(), min_scale));
  BigInt mag = d.units();
  const bool negative = mag < 0;
  if (negative) mag = -mag;
  std::string digits = mag.str();
  if (digits.size() <= d.scale()) digits.insert(0, d.scale() + 1 - digits.size(), '0');
  std::string out;
  if (negative) out.push_back('-');
  out.append(digits, 0, digits.size() - d.scale());
  if (d.scale() > 0) {
    out.push_back(convention == Convention::comma_decimal ? ',' : '.');
    out.append(digits, digits.size() - d.scale(), std::string::npos);
  }
  return out;
}

Convention detect_convention(std::span<const std::string> cells) {
  size_t comma = 0;
  size_t dot = 0;
  for (const auto& cell : cells) {
    if (auto a = parse_amount(cell); a && a->convention) {
      (*a->convention == Convention::comma_decimal ? comma : dot) += 1;
    }
  }
  return dot > comma ? Convention::dot_decimal : Convention::comma_decimal;
}

}  // namespace tablerouter

#include "doctest.h"

#include "oracles.hpp"
#include "tablerouter/amount.hpp"
#include "tablerouter/json_extract.hpp"
#include "tablerouter/synth.hpp"
#include "tablerouter/text.hpp"

#include <algorithm>

using namespace tablerouter;

namespace {
Decimal dec(const char* s) { return parse_amount(s).value().value; }
}  // namespace

TEST_CASE("text folding") {
  CHECK(text::fold("  Détartrage  ") == "detartrage");
  CHECK(text::fold("SOUS-TOTAL") == "sous-total");
  CHECK(text::fold("Total à   payer") == "total a payer");
  CHECK(text::fold("ﬁn") == "fin");
  CHECK(text::split("a;b;;c", ';').size() == 4);
  CHECK(text::join({"a", "b"}, "; ") == "a; b");
}

TEST_CASE("parse_amount examples") {
  auto a = parse_amount("90,00");
  REQUIRE(a);
  CHECK(a->value == Decimal(BigInt(9000), 2));
  CHECK(a->convention == Convention::comma_decimal);
  CHECK(parse_amount("1 234,56 €")->value == Decimal(BigInt(123456), 2));
  CHECK_FALSE(parse_amount("abc"));
  CHECK(parse_amount("1.234,56")->value == dec("1234.56"));
  CHECK(parse_amount("1,234.56")->value == dec("1234,56"));
  CHECK(parse_amount("1,234.56")->convention == Convention::dot_decimal);
  CHECK(parse_amount("-12,5")->value == Decimal(BigInt(-125), 1));
  CHECK(parse_amount("EUR 15")->value == Decimal::from_integer(15));
  CHECK(parse_amount("15 eur")->value == Decimal::from_integer(15));
  CHECK(parse_amount("12 %")->value == Decimal::from_integer(12));
  CHECK(parse_amount("1 234,50")->value == dec("1234,50"));
  CHECK_FALSE(parse_amount("Bridge 3 éléments"));
  CHECK_FALSE(parse_amount(""));
  CHECK_FALSE(parse_amount("1,2,3"));
  CHECK_FALSE(parse_amount("12abc"));
  CHECK_FALSE(parse_amount("--5"));
}

TEST_CASE("format_amount examples") {
  CHECK(format_amount(Decimal::from_integer(90), Convention::comma_decimal, 2) == "90,00");
  CHECK(format_amount(Decimal(BigInt(-25), 1), Convention::dot_decimal, 2) == "-2.50");
  CHECK(format_amount(Decimal(), Convention::comma_decimal, 2) == "0,00");
  CHECK(format_amount(Decimal(BigInt(123456), 3), Convention::comma_decimal, 2) == "123,456");
  CHECK(format_amount(Decimal(BigInt(123456789), 2), Convention::comma_decimal, 0) == "1234567,89");
}

TEST_CASE("decimal arithmetic is exact") {
  const Decimal tenth = dec("0,10");
  CHECK(format_amount(tenth + tenth + tenth, Convention::comma_decimal, 2) == "0,30");
  CHECK(dec("0,10") + dec("0,2") == dec("0,30"));
  CHECK(dec("1,5") == dec("1,50"));
  CHECK(dec("1,5") < dec("1,51"));
  CHECK((dec("40,00") - dec("50,00")).is_negative());
}

TEST_CASE("majority convention detection") {
  std::vector<std::string> comma = {"40,00", "50,00", "1.234,00", "x", "12"};
  CHECK(detect_convention(comma) == Convention::comma_decimal);
  std::vector<std::string> dot = {"40.00", "50.00", "3,5"};
  CHECK(detect_convention(dot) == Convention::dot_decimal);
  std::vector<std::string> none = {"a", "12"};
  CHECK(detect_convention(none) == Convention::comma_decimal);
}

TEST_CASE("round trip and agreement with the rational reader") {
  Rng rng(11);
  for (int i = 0; i < 3000; ++i) {
    const Decimal v(BigInt(rng.uniform(-10'000'000, 10'000'000)), static_cast<unsigned>(rng.uniform(0, 4)));
    for (Convention c : {Convention::comma_decimal, Convention::dot_decimal}) {
      const unsigned s = static_cast<unsigned>(rng.uniform(0, 3));
      const std::string f = format_amount(v, c, s);
      // Three fraction digits read as a thousands group, so the round trip
      // is only defined up to two.
      if (std::max(v.scale(), s) > 2) continue;
      auto back = parse_amount(f);
      REQUIRE(back);
      CHECK(back->value == v);
      auto o = oracle::read_number(f);
      REQUIRE(o);
      CHECK(oracle::Rational(oracle::Int(v.units().str()), oracle::Int("1" + std::string(v.scale(), '0'))) == *o);
    }
  }
}

TEST_CASE("parse_amount is total on arbitrary strings") {
  Rng rng(3);
  const std::string alphabet = "0123456789 ,.-+€$%eurEURabc\xc2\xa0\xe2\x80\xaf\xff";
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    const long long n = rng.uniform(0, 12);
    for (long long k = 0; k < n; ++k) s += alphabet[static_cast<size_t>(rng.uniform(0, static_cast<long long>(alphabet.size()) - 1))];
    CHECK_NOTHROW((void)parse_amount(s));
    CHECK_NOTHROW((void)extract_json(s));
  }
}

TEST_CASE("shuffled sums are identical") {
  Rng rng(5);
  std::vector<Decimal> xs;
  for (int i = 0; i < 2000; ++i) xs.push_back(Decimal(BigInt(rng.uniform(-99999, 99999)), 2));
  Decimal first;
  for (const auto& x : xs) first += x;
  for (int round = 0; round < 5; ++round) {
    rng.shuffle(xs);
    Decimal s;
    for (const auto& x : xs) s += x;
    CHECK(s == first);
    CHECK(s.units() == first.units());
  }
}

TEST_CASE("extract_json examples") {
  CHECK(extract_json(R"({"answers":["a"]})")->at("answers")[0] == "a");
  auto fenced = extract_json("Sure! ```json\n{\"categories\":[\"other\"]}\n```");
  REQUIRE(fenced);
  CHECK(fenced->at("categories")[0] == "other");
  CHECK_FALSE(extract_json("no json here"));
  CHECK(extract_json("prefix [1, 2] suffix")->size() == 2);
  CHECK(extract_json(R"(x {"a": "}"} y)")->at("a") == "}");
  CHECK(text::trim(strip_code_fences("```html\n<table></table>\n```")) == "<table></table>");
  CHECK(parse_amount("0,10")->value == Decimal(BigInt(10), 2));
  CHECK(parse_amount("09")->value == Decimal::from_integer(9));
}

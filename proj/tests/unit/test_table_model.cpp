#include "doctest.h"

#include "oracles.hpp"
#include "tablerouter/error.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/table_json.hpp"

using namespace tablerouter;

namespace {

const char* kSubtotal =
    "<table><thead><tr><th>Acte</th><th>Honoraires</th></tr></thead><tbody>"
    "<tr><td>Détartrage</td><td>40,00</td></tr><tr><td>Extraction</td><td>50,00</td></tr>"
    "<tr><td>SOUS-TOTAL</td><td>90,00</td></tr></tbody></table>";

}  // namespace

TEST_CASE("sanitize strips chatter and fences") {
  const std::string raw = "Here is the table:\n```html\n<TABLE class=x><tr><TH style='a'>A</th><td>1<br>2</td></tr></table>\n```\nDone.";
  const std::string s = sanitize_html(raw);
  CHECK(s.rfind("<table>", 0) == 0);
  CHECK(s.find("class") == std::string::npos);
  CHECK(s.find("style") == std::string::npos);
  CHECK(s.find("<th") == std::string::npos);
  CHECK(s.size() >= 8);
  CHECK(s.substr(s.size() - 8) == "</table>");
  CHECK_THROWS_AS(sanitize_html("no table here"), Error);
  try {
    sanitize_html("<div>x</div>");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTableFound);
  }
}

TEST_CASE("sanitize closes an unterminated table") {
  const std::string s = sanitize_html("<table><tr><td>a<td>b");
  const TableGrid g = parse_table(s);
  CHECK(g.n_rows() == 1);
  CHECK(g.n_cols() == 2);
  CHECK(g.at(0, 1).text == "b");
}

TEST_CASE("parse the subtotal table") {
  const TableGrid g = parse_table(sanitize_html(kSubtotal));
  CHECK(g.n_rows() == 4);
  CHECK(g.n_cols() == 2);
  CHECK(g.header_row_count() == 1);
  CHECK(g.at(1, 0).text == "Détartrage");
  CHECK_FALSE(g.check_invariants());
  const auto roles = detect_row_roles(g);
  REQUIRE(roles.size() == 4);
  CHECK(roles[0] == RowRole::header);
  CHECK(roles[1] == RowRole::data);
  CHECK(roles[3] == RowRole::subtotal);
  const TableJson t = to_table_json(g, roles);
  CHECK(t.headers == std::vector<std::string>{"Acte", "Honoraires"});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[2].index == 3);
  CHECK(t.rows[2].role == RowRole::subtotal);
  CHECK(to_json(t)["rows"][2]["row_role"] == "subtotal");
}

TEST_CASE("merged cells replicate down, not across") {
  const TableGrid g = parse_table(
      "<table><tr><td rowspan=\"2\">Acte</td><td colspan=\"2\">Montants</td></tr>"
      "<tr><td>Base</td><td>Payé</td></tr>"
      "<tr><td rowspan=\"2\">Soins</td><td>10,00</td><td>5,00</td></tr>"
      "<tr><td>20,00</td><td>7,00</td></tr></table>");
  CHECK_FALSE(g.check_invariants());
  CHECK(g.n_rows() == 4);
  CHECK(g.n_cols() == 3);
  CHECK(g.at(3, 0).text == "Soins");
  CHECK_FALSE(g.at(3, 0).anchor);
  CHECK(g.at(0, 2).text.empty());
  CHECK(g.anchor_of(0, 2) == CellPos{0, 1});
  CHECK(g.spanning_cell_count() == 3);

  TableGrid two = g;
  two.set_header_row_count(2);
  const TableJson t = to_table_json(two, detect_row_roles(two));
  CHECK(t.headers == std::vector<std::string>{"Acte", "Montants | Base", "Montants | Payé"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1].cells[0] == "Soins");
}

TEST_CASE("row roles follow the keyword precedence") {
  CHECK(detect_row_role({"Sous-total", "12"}) == RowRole::subtotal);
  CHECK(detect_row_role({"TOTAL à payer", "12"}) == RowRole::total);
  CHECK(detect_row_role({"Détartrage", "12"}) == RowRole::data);
  RoleKeywordConfig k = RoleKeywordConfig::from_json_text(R"({"subtotal":["cumul"],"total":["somme"]})");
  CHECK(detect_row_role({"Cumul partiel"}, k) == RowRole::subtotal);
  CHECK(detect_row_role({"Total"}, k) == RowRole::data);
  CHECK(row_role_from_string("subtotal") == RowRole::subtotal);
  CHECK_FALSE(row_role_from_string("bogus"));
}

TEST_CASE("lenient parsing closes implicit cells") {
  const TableGrid g = parse_table("<table><tr><td>a<td>b<tr><td>c<td>d</table>");
  CHECK(g.n_rows() == 2);
  CHECK(g.at(1, 1).text == "d");
  CHECK(decode_entities("a &amp; b &lt;c&gt; &#233;") == "a & b <c> é");
  CHECK(escape_html("<a&b>") == "&lt;a&amp;b&gt;");
}

TEST_CASE("ragged rows are padded with empty slots") {
  const TableGrid g = parse_table("<table><tr><td>a</td><td>b</td><td>c</td></tr><tr><td>x</td></tr></table>");
  CHECK(g.n_cols() == 3);
  CHECK(g.at(1, 2).text.empty());
  CHECK(g.at(1, 2).anchor);
}

TEST_CASE("overlapping spans are rejected by from_anchors") {
  std::vector<TableGrid::Anchor> a = {{0, 0, 2, 2, "x"}, {1, 1, 1, 1, "y"}};
  CHECK_FALSE(TableGrid::from_anchors(2, 2, a, 0));
  std::vector<TableGrid::Anchor> out = {{0, 0, 3, 1, "x"}};
  CHECK_FALSE(TableGrid::from_anchors(2, 2, out, 0));
}

TEST_CASE("serialize then parse is a fixpoint on random grids") {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const TableGrid g = oracle::random_grid(rng, 6, 6, 0.3);
    REQUIRE_FALSE(g.check_invariants());
    const std::string html = to_html(g);
    const TableGrid back = parse_table(html);
    CHECK(back == g);
    CHECK(to_html(back) == html);
    CHECK(sanitize_html(html) == sanitize_html(sanitize_html(html)));
  }
}

TEST_CASE("table json round trips through its wire form") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const TableGrid g = oracle::random_grid(rng, 5, 5, 0.3);
    const TableJson t = to_table_json(g);
    CHECK(table_json_from_json(to_json(t)) == t);
    CHECK(t.rows.size() == g.n_rows() - g.header_row_count());
    for (const auto& r : t.rows) CHECK(r.cells.size() == t.headers.size());
  }
}

TEST_CASE("role count mismatch is rejected") {
  const TableGrid g = parse_table(kSubtotal);
  std::vector<RowRole> roles(2, RowRole::data);
  CHECK_THROWS(to_table_json(g, roles));
}

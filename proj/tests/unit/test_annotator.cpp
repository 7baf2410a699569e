#include "doctest.h"

#include "tablerouter/annotator.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/synth.hpp"

#include "httplib.h"

#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

using namespace tablerouter;
using namespace tablerouter::annot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kSubtotalHtml =
    "<table><thead><tr><th>Acte</th><th>Honoraires</th></tr></thead><tbody>"
    "<tr><td>Détartrage</td><td>40,00</td></tr><tr><td>Extraction</td><td>50,00</td></tr>"
    "<tr><td>SOUS-TOTAL</td><td>90,00</td></tr></tbody></table>";

fs::path workspace(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tablerouter-annot-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy_file(fs::path(SOURCE_DIR) / "configs/subtotal/manifest.jsonl", dir / "manifest.jsonl");
  return dir;
}

GridState subtotal_state() {
  GridState s;
  s.grid = parse_table(kSubtotalHtml);
  s.roles = detect_row_roles(s.grid);
  return s;
}

std::string rejection(const GridState& s, const EditOp& op, std::string* invariant = nullptr) {
  try {
    apply_edit(s, op);
  } catch (const EditRejected& e) {
    if (invariant) *invariant = e.violated_invariant();
    return std::string(to_string(e.code()));
  }
  return "accepted";
}

json edit(uint64_t version, json op) { return json{{"version", version}, {"edit", std::move(op)}}; }

}  // namespace

TEST_CASE("edit examples") {
  const GridState s = subtotal_state();
  const GridState t = apply_edit(s, SetCellText{1, 1, "45,00"});
  CHECK(t.grid.at(1, 1).text == "45,00");
  CHECK(s.grid.at(1, 1).text == "40,00");

  const GridState ins = apply_edit(s, InsertRow{2});
  CHECK(ins.grid.n_rows() == 5);
  CHECK(ins.grid.at(2, 0).text.empty());
  CHECK(ins.roles.size() == 5);
  CHECK(ins.roles[2] == RowRole::data);

  const GridState dup = apply_edit(s, DuplicateRow{3});
  CHECK(dup.grid.at(4, 0).text == "SOUS-TOTAL");
  CHECK(dup.roles[4] == RowRole::subtotal);

  const GridState del = apply_edit(s, DeleteRow{3});
  CHECK(del.grid.n_rows() == 3);
  CHECK(del.roles.size() == 3);

  const GridState merged = apply_edit(s, MergeCells{1, 0, 2, 0});
  CHECK(merged.grid.at(1, 0).rowspan == 2);
  CHECK(merged.grid.at(1, 0).text == "Détartrage Extraction");
  CHECK_FALSE(merged.grid.check_invariants());
  const GridState split = apply_edit(merged, SplitCell{2, 0});
  CHECK(split.grid.at(1, 0).rowspan == 1);
  CHECK(split.grid.spanning_cell_count() == 0);

  const GridState hdr = apply_edit(s, SetHeaderRowCount{2});
  CHECK(hdr.grid.header_row_count() == 2);
  CHECK(hdr.roles[1] == RowRole::header);
  const GridState back = apply_edit(hdr, SetHeaderRowCount{1});
  CHECK(back.roles[1] == RowRole::data);
}

TEST_CASE("invalid edits are rejected with the violated invariant") {
  const GridState s = subtotal_state();
  std::string inv;
  CHECK(rejection(s, SetCellText{9, 0, "x"}, &inv) == "OutOfBounds");
  CHECK_FALSE(inv.empty());
  CHECK(rejection(s, InsertRow{6}) == "OutOfBounds");
  CHECK(rejection(s, MergeCells{0, 0, 1, 0}, &inv) == "SpanConflict");
  CHECK(inv.find("header") != std::string::npos);
  CHECK(rejection(s, SplitCell{1, 0}) == "InvalidArgument");
  const GridState m = apply_edit(s, MergeCells{1, 0, 2, 1});
  CHECK(rejection(m, MergeCells{2, 0, 3, 0}) == "SpanConflict");
  CHECK(rejection(s, SetHeaderRowCount{9}) != "accepted");
  GridState one;
  one.grid = parse_table("<table><tr><td>a</td></tr></table>");
  one.roles = detect_row_roles(one.grid);
  CHECK(rejection(one, DeleteRow{0}) == "InvalidArgument");
}

TEST_CASE("edit ops round trip through JSON") {
  const std::vector<EditOp> ops = {SetCellText{1, 2, "x"}, InsertRow{1}, DeleteRow{0}, DuplicateRow{2},
                                   MergeCells{0, 0, 1, 1}, SplitCell{3, 1}, SetHeaderRowCount{2}};
  for (const auto& op : ops) CHECK(to_json(edit_op_from_json(to_json(op))) == to_json(op));
  CHECK_THROWS(edit_op_from_json(json{{"op", "Explode"}}));
  CHECK_THROWS(edit_op_from_json(json{{"op", "InsertRow"}, {"at", -1}}));
}

TEST_CASE("random edit sequences keep the grid valid") {
  Rng rng(3);
  GridState s = subtotal_state();
  size_t accepted = 0;
  for (int i = 0; i < 2000; ++i) {
    const size_t rows = s.grid.n_rows(), cols = s.grid.n_cols();
    auto rr = [&] { return static_cast<size_t>(rng.uniform(0, static_cast<long long>(rows))); };
    auto rc = [&] { return static_cast<size_t>(rng.uniform(0, static_cast<long long>(cols))); };
    EditOp op;
    switch (rng.uniform(0, 6)) {
      case 0: op = SetCellText{rr(), rc(), "v" + std::to_string(i)}; break;
      case 1: op = InsertRow{rr()}; break;
      case 2: op = DeleteRow{rr()}; break;
      case 3: op = DuplicateRow{rr()}; break;
      case 4: {
        const size_t r1 = rr(), c1 = rc();
        op = MergeCells{r1, c1, r1 + static_cast<size_t>(rng.uniform(0, 2)), c1 + static_cast<size_t>(rng.uniform(0, 2))};
        break;
      }
      case 5: op = SplitCell{rr(), rc()}; break;
      default: op = SetHeaderRowCount{static_cast<size_t>(rng.uniform(0, 2))}; break;
    }
    try {
      const GridState next = apply_edit(s, op);
      REQUIRE_FALSE(next.grid.check_invariants());
      REQUIRE(next.roles.size() == next.grid.n_rows());
      for (size_t r = 0; r < next.grid.n_rows(); ++r) CHECK((next.roles[r] == RowRole::header) == (r < next.grid.header_row_count()));
      CHECK(parse_table(to_html(next.grid)) == next.grid);
      s = next;
      ++accepted;
      if (s.grid.n_rows() > 12) s = subtotal_state();
    } catch (const EditRejected& e) {
      CHECK(!std::string(to_string(e.code())).empty());
    }
  }
  CHECK(accepted > 200);
}

TEST_CASE("service edits, version checks and saves") {
  const fs::path dir = workspace("svc");
  AnnotatorService svc(dir / "manifest.jsonl");
  const auto list = svc.list_samples();
  CHECK(list.body["samples"].size() == 1);
  CHECK(svc.get_sample("nope").status == 404);

  auto r = svc.post_edit("subtotal", edit(0, {{"op", "SetCellText"}, {"r", 1}, {"c", 1}, {"text", "41,00"}}));
  CHECK(r.status == 200);
  CHECK(r.body["version"] == 1);
  CHECK(svc.post_edit("subtotal", edit(0, {{"op", "InsertRow"}, {"at", 1}})).status == 409);
  const auto stale = svc.post_edit("subtotal", edit(0, {{"op", "InsertRow"}, {"at", 1}}));
  CHECK(stale.body["code"] == "StaleVersion");
  const auto bounds = svc.post_edit("subtotal", edit(1, {{"op", "SetCellText"}, {"r", 50}, {"c", 0}, {"text", "x"}}));
  CHECK(bounds.status == 422);
  CHECK(bounds.body.contains("violated_invariant"));
  CHECK(svc.get_sample("subtotal").body["version"] == 1);

  const auto saved = svc.post_save("subtotal", {{"version", 1}});
  CHECK(saved.status == 200);
  CHECK(saved.body["dirty"] == false);
  CHECK(fs::exists(svc.annotation_dir() / "subtotal.html"));
  CHECK(fs::exists(svc.annotation_dir() / "subtotal.roles.json"));
  for (const auto& e : fs::directory_iterator(svc.annotation_dir())) CHECK(e.path().extension() != ".tmp");
  fs::remove_all(dir);
}

TEST_CASE("saved annotations win on reload, byte for byte") {
  const fs::path dir = workspace("reload");
  std::string html;
  {
    AnnotatorService svc(dir / "manifest.jsonl");
    auto r = svc.post_edit("subtotal", edit(0, {{"op", "MergeCells"}, {"r1", 1}, {"c1", 0}, {"r2", 2}, {"c2", 0}}));
    REQUIRE(r.status == 200);
    r = svc.post_edit("subtotal", edit(1, {{"op", "SetCellText"}, {"r", 1}, {"c", 0}, {"text", "Soins groupés"}}));
    REQUIRE(r.status == 200);
    html = r.body["html"];
    REQUIRE(svc.post_save("subtotal", {{"version", 2}}).status == 200);
  }
  AnnotatorService again(dir / "manifest.jsonl");
  const auto s = again.get_sample("subtotal");
  CHECK(s.body["html"] == html);
  CHECK(s.body["dirty"] == false);
  CHECK(*read_file(again.annotation_dir() / "subtotal.html") == html);
  fs::remove_all(dir);
}

TEST_CASE("concurrent saves leave one consistent file") {
  const fs::path dir = workspace("race");
  AnnotatorService svc(dir / "manifest.jsonl");
  REQUIRE(svc.post_edit("subtotal", edit(0, {{"op", "SetCellText"}, {"r", 1}, {"c", 1}, {"text", "1,00"}})).status == 200);
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      const auto r = svc.post_save("subtotal", {{"version", 1}});
      if (r.status == 200) ++ok;
      else if (r.status == 409) ++conflict;
    });
  for (auto& t : threads) t.join();
  CHECK(ok.load() == 1);
  CHECK(conflict.load() == 7);
  const auto on_disk = read_file(svc.annotation_dir() / "subtotal.html");
  REQUIRE(on_disk);
  CHECK(*on_disk == svc.get_sample("subtotal").body["html"].get<std::string>());
  fs::remove_all(dir);
}

TEST_CASE("trace view highlights contributing cells") {
  const fs::path dir = workspace("trace");
  AnnotatorService svc(dir / "manifest.jsonl");
  const auto r = svc.post_trace("subtotal", {{"program", R"([{"op":"SUM","col":"Honoraires"}])"}, {"category", "aggregation_sum"}});
  REQUIRE(r.status == 200);
  CHECK(r.body["ok"] == true);
  CHECK(r.body["answer"] == "90,00");
  CHECK(r.body["contributing_slots"] == json::parse(R"([{"row":1,"col":1},{"row":2,"col":1}])"));
  CHECK(r.body["trace"]["steps"][0]["rows_out"] == json::array({1, 2}));

  const auto bad = svc.post_trace("subtotal", {{"program", json::array({{{"op", "SUM"}, {"col", "Nope"}}})}});
  CHECK(bad.body["ok"] == false);
  CHECK(bad.body["error"]["kind"] == "UnknownHeader");
  fs::remove_all(dir);
}

TEST_CASE("REST surface over a socket") {
  const fs::path dir = workspace("rest");
  AnnotatorService svc(dir / "manifest.jsonl");
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto list = client.Get("/samples");
  REQUIRE(list);
  CHECK(list->status == 200);
  CHECK(json::parse(list->body)["samples"][0]["id"] == "subtotal");
  auto got = client.Get("/samples/subtotal");
  REQUIRE(got);
  CHECK(json::parse(got->body)["grid"]["n_rows"] == 4);
  auto e = client.Post("/samples/subtotal/edits", edit(0, {{"op", "DeleteRow"}, {"at", 3}}).dump(), "application/json");
  REQUIRE(e);
  CHECK(e->status == 200);
  auto conflict = client.Post("/samples/subtotal/edits", edit(0, {{"op", "DeleteRow"}, {"at", 2}}).dump(), "application/json");
  REQUIRE(conflict);
  CHECK(conflict->status == 409);
  auto saved = client.Post("/samples/subtotal/save", json{{"version", 1}}.dump(), "application/json");
  REQUIRE(saved);
  CHECK(saved->status == 200);
  auto tr = client.Post("/samples/subtotal/trace", json{{"program", R"([{"op":"COUNT","col":"Acte"}])"}}.dump(), "application/json");
  REQUIRE(tr);
  CHECK(json::parse(tr->body)["answer"] == "2");
  auto missing = client.Get("/samples/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto garbage = client.Post("/samples/subtotal/edits", "{not json", "application/json");
  REQUIRE(garbage);
  CHECK(garbage->status == 400);
  auto image = client.Get("/samples/subtotal/image");
  REQUIRE(image);
  CHECK(image->status == 404);

  server.stop();
  th.join();
  fs::remove_all(dir);
}

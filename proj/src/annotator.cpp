#include "tablerouter/annotator.hpp"

#include "tablerouter/dsl.hpp"
#include "tablerouter/executor.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/json_extract.hpp"
#include "tablerouter/table_json.hpp"
#include "tablerouter/text.hpp"

#include "httplib.h"

#include <fstream>

namespace tablerouter::annot {

using nlohmann::json;
namespace fs = std::filesystem;
using Anchor = TableGrid::Anchor;

namespace {

size_t get_index(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 0)
    throw EditRejected(ErrorCode::InvalidArgument, std::string("field \"") + key + "\" must be a non-negative integer");
  return j.at(key).get<size_t>();
}

[[noreturn]] void out_of_bounds(const std::string& what) { throw EditRejected(ErrorCode::OutOfBounds, what, "coordinates within grid bounds"); }

GridState rebuild(size_t n_rows, size_t n_cols, const std::vector<Anchor>& anchors,
                  size_t header_rows, std::vector<RowRole> roles) {
  auto g = TableGrid::from_anchors(n_rows, n_cols, anchors, header_rows);
  if (!g) throw EditRejected(ErrorCode::SpanConflict, "spans overlap or leave the grid", "spans are disjoint and in bounds");
  if (auto v = g->check_invariants()) throw EditRejected(ErrorCode::SpanConflict, *v, *v);
  for (const auto& a : g->anchors())
    if (a.row < header_rows && a.row + a.rowspan > header_rows)
      throw EditRejected(ErrorCode::SpanConflict, "a span crosses the header/body boundary",
                         "spans do not cross the header/body boundary");
  for (size_t r = 0; r < roles.size(); ++r) {
    if (r < header_rows) roles[r] = RowRole::header;
    else if (roles[r] == RowRole::header) roles[r] = RowRole::data;
  }
  return GridState{std::move(*g), std::move(roles)};
}

struct Editor {
  const GridState& s;

  size_t rows() const { return s.grid.n_rows(); }
  size_t cols() const { return s.grid.n_cols(); }
  size_t hdr() const { return s.grid.header_row_count(); }

  void check_slot(size_t r, size_t c) const {
    if (r >= rows() || c >= cols())
      out_of_bounds("slot (" + std::to_string(r) + ", " + std::to_string(c) + ") outside " + std::to_string(rows()) + "x" + std::to_string(cols()));
  }

  GridState operator()(const SetCellText& op) const {
    check_slot(op.r, op.c);
    const CellPos a = s.grid.anchor_of(op.r, op.c);
    auto anchors = s.grid.anchors();
    for (auto& x : anchors)
      if (x.row == a.row && x.col == a.col) x.text = op.text;
    return rebuild(rows(), cols(), anchors, hdr(), s.roles);
  }

  GridState operator()(const InsertRow& op) const {
    if (op.at > rows()) out_of_bounds("row " + std::to_string(op.at) + " outside 0.." + std::to_string(rows()));
    auto anchors = s.grid.anchors();
    for (auto& a : anchors) {
      if (a.row >= op.at) ++a.row;
      else if (a.row + a.rowspan > op.at) ++a.rowspan;
    }
    auto roles = s.roles;
    const bool in_header = op.at < hdr();
    roles.insert(roles.begin() + static_cast<std::ptrdiff_t>(op.at), in_header ? RowRole::header : RowRole::data);
    return rebuild(rows() + 1, cols(), anchors, hdr() + (in_header ? 1 : 0), roles);
  }

  GridState operator()(const DeleteRow& op) const {
    if (op.at >= rows()) out_of_bounds("row " + std::to_string(op.at) + " outside 0.." + std::to_string(rows() - 1));
    if (rows() == 1) throw EditRejected(ErrorCode::InvalidArgument, "cannot delete the only row", "at least one row");
    std::vector<Anchor> anchors;
    for (auto a : s.grid.anchors()) {
      if (a.row > op.at) {
        --a.row;
      } else if (a.row + a.rowspan > op.at) {
        if (a.rowspan == 1) continue;
        --a.rowspan;
      }
      anchors.push_back(std::move(a));
    }
    auto roles = s.roles;
    roles.erase(roles.begin() + static_cast<std::ptrdiff_t>(op.at));
    return rebuild(rows() - 1, cols(), anchors, hdr() - (op.at < hdr() ? 1 : 0), roles);
  }

  GridState operator()(const DuplicateRow& op) const {
    if (op.at >= rows()) out_of_bounds("row " + std::to_string(op.at) + " outside 0.." + std::to_string(rows() - 1));
    std::vector<Anchor> anchors;
    for (auto a : s.grid.anchors()) {
      if (a.row > op.at) {
        ++a.row;
      } else if (a.row + a.rowspan > op.at) {
        if (a.row == op.at && a.rowspan == 1) {
          Anchor copy = a;
          copy.row = op.at + 1;
          anchors.push_back(std::move(copy));
        } else {
          ++a.rowspan;
        }
      }
      anchors.push_back(std::move(a));
    }
    auto roles = s.roles;
    roles.insert(roles.begin() + static_cast<std::ptrdiff_t>(op.at) + 1, roles[op.at]);
    return rebuild(rows() + 1, cols(), anchors, hdr() + (op.at < hdr() ? 1 : 0), roles);
  }

  GridState operator()(const MergeCells& op) const {
    check_slot(op.r1, op.c1);
    check_slot(op.r2, op.c2);
    if (op.r1 > op.r2 || op.c1 > op.c2) throw EditRejected(ErrorCode::InvalidArgument, "merge rectangle corners are reversed");
    if (op.r1 == op.r2 && op.c1 == op.c2) throw EditRejected(ErrorCode::InvalidArgument, "merge needs at least two slots");
    std::vector<Anchor> kept;
    std::vector<std::string> texts;
    for (auto& a : s.grid.anchors()) {
      const size_t ar2 = a.row + a.rowspan - 1, ac2 = a.col + a.colspan - 1;
      const bool disjoint = ar2 < op.r1 || a.row > op.r2 || ac2 < op.c1 || a.col > op.c2;
      if (disjoint) {
        kept.push_back(a);
        continue;
      }
      const bool inside = a.row >= op.r1 && ar2 <= op.r2 && a.col >= op.c1 && ac2 <= op.c2;
      if (!inside)
        throw EditRejected(ErrorCode::SpanConflict,
                           "merge region partially overlaps the span anchored at (" + std::to_string(a.row) + ", " +
                               std::to_string(a.col) + ")",
                           "spans are disjoint");
      if (!text::trim(a.text).empty()) texts.push_back(a.text);
    }
    kept.push_back({op.r1, op.c1, op.r2 - op.r1 + 1, op.c2 - op.c1 + 1, text::join(texts, " ")});
    return rebuild(rows(), cols(), kept, hdr(), s.roles);
  }

  GridState operator()(const SplitCell& op) const {
    check_slot(op.r, op.c);
    const CellPos p = s.grid.anchor_of(op.r, op.c);
    const CellSlot& a = s.grid.at(p.row, p.col);
    if (a.rowspan == 1 && a.colspan == 1) throw EditRejected(ErrorCode::InvalidArgument, "cell is not merged");
    std::vector<Anchor> anchors;
    for (auto& x : s.grid.anchors()) {
      if (x.row == p.row && x.col == p.col) x.rowspan = x.colspan = 1;
      anchors.push_back(x);
    }
    return rebuild(rows(), cols(), anchors, hdr(), s.roles);
  }

  GridState operator()(const SetHeaderRowCount& op) const {
    if (op.n > rows()) out_of_bounds("header row count " + std::to_string(op.n) + " exceeds " + std::to_string(rows()) + " rows");
    auto roles = s.roles;
    for (size_t r = op.n; r < hdr() && r < roles.size(); ++r) roles[r] = RowRole::data;
    return rebuild(rows(), cols(), s.grid.anchors(), op.n, roles);
  }
};

int status_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::StaleVersion:
    case ErrorCode::SpanConflict: return 409;
    case ErrorCode::OutOfBounds: return 422;
    case ErrorCode::FileUnreadable: return 500;
    default: return 400;
  }
}

Response error_response(const Error& e, const std::string& invariant = {}) {
  json body{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (!invariant.empty()) body["violated_invariant"] = invariant;
  return {status_for(e.code()), body, {}, "application/json"};
}

json roles_json(const std::vector<RowRole>& roles) {
  json out = json::array();
  for (RowRole r : roles) out.push_back(to_string(r));
  return out;
}

uint64_t require_version(const json& body) {
  if (!body.is_object() || !body.contains("version") || !body.at("version").is_number_integer())
    throw Error(ErrorCode::InvalidArgument, "request must carry the session \"version\"");
  return body.at("version").get<uint64_t>();
}

void write_text(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, p);
}

std::string mime_for(const fs::path& p) {
  const std::string ext = text::to_lower_ascii(p.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "application/octet-stream";
}

}  // namespace

EditOp edit_op_from_json(const json& j) {
  if (!j.is_object() || !j.contains("op") || !j.at("op").is_string())
    throw EditRejected(ErrorCode::InvalidArgument, "edit must be an object with an \"op\" name");
  const std::string op = j.at("op").get<std::string>();
  if (op == "SetCellText") {
    if (!j.contains("text") || !j.at("text").is_string()) throw EditRejected(ErrorCode::InvalidArgument, "SetCellText needs \"text\"");
    return SetCellText{get_index(j, "r"), get_index(j, "c"), j.at("text").get<std::string>()};
  }
  if (op == "InsertRow") return InsertRow{get_index(j, "at")};
  if (op == "DeleteRow") return DeleteRow{get_index(j, "at")};
  if (op == "DuplicateRow") return DuplicateRow{get_index(j, "at")};
  if (op == "MergeCells") return MergeCells{get_index(j, "r1"), get_index(j, "c1"), get_index(j, "r2"), get_index(j, "c2")};
  if (op == "SplitCell") return SplitCell{get_index(j, "r"), get_index(j, "c")};
  if (op == "SetHeaderRowCount") return SetHeaderRowCount{get_index(j, "n")};
  throw EditRejected(ErrorCode::InvalidArgument, "unknown edit op \"" + op + "\"");
}

json to_json(const EditOp& op) {
  return std::visit(
      [](const auto& o) -> json {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, SetCellText>) return {{"op", "SetCellText"}, {"r", o.r}, {"c", o.c}, {"text", o.text}};
        else if constexpr (std::is_same_v<T, InsertRow>) return {{"op", "InsertRow"}, {"at", o.at}};
        else if constexpr (std::is_same_v<T, DeleteRow>) return {{"op", "DeleteRow"}, {"at", o.at}};
        else if constexpr (std::is_same_v<T, DuplicateRow>) return {{"op", "DuplicateRow"}, {"at", o.at}};
        else if constexpr (std::is_same_v<T, MergeCells>)
          return {{"op", "MergeCells"}, {"r1", o.r1}, {"c1", o.c1}, {"r2", o.r2}, {"c2", o.c2}};
        else if constexpr (std::is_same_v<T, SplitCell>) return {{"op", "SplitCell"}, {"r", o.r}, {"c", o.c}};
        else return {{"op", "SetHeaderRowCount"}, {"n", o.n}};
      },
      op);
}

GridState apply_edit(const GridState& s, const EditOp& op) { return std::visit(Editor{s}, op); }

json grid_json(const TableGrid& g) {
  json anchors = json::array();
  for (const auto& a : g.anchors())
    anchors.push_back({{"row", a.row}, {"col", a.col}, {"rowspan", a.rowspan}, {"colspan", a.colspan}, {"text", a.text}});
  return {{"n_rows", g.n_rows()}, {"n_cols", g.n_cols()}, {"header_row_count", g.header_row_count()}, {"anchors", anchors}};
}

AnnotatorService::AnnotatorService(const fs::path& manifest) : dir_(manifest.parent_path()) {
  ManifestLoad load = load_manifest(manifest);
  samples_ = std::move(load.samples);
  warnings_ = std::move(load.warnings);
  for (auto& e : load.errors) warnings_.push_back(std::move(e));
  for (const Sample& s : samples_) {
    auto sl = std::make_unique<Slot>();
    sl->sample = &s;
    sl->session.sample_id = s.id;
    std::string html = s.gt_html;
    std::optional<std::vector<RowRole>> roles = s.row_roles;
    const fs::path saved = annotation_dir() / (s.id + ".html");
    if (auto content = read_file(saved)) {
      html = std::move(*content);
      roles.reset();
      if (auto rj = read_file(annotation_dir() / (s.id + ".roles.json"))) {
        json j = json::parse(*rj, nullptr, false);
        if (j.is_array()) {
          std::vector<RowRole> parsed;
          for (const auto& r : j)
            if (auto role = r.is_string() ? row_role_from_string(r.get<std::string>()) : std::nullopt) parsed.push_back(*role);
          roles = std::move(parsed);
        }
      }
    }
    try {
      TableGrid g = parse_table(sanitize_html(html));
      std::vector<RowRole> rr = roles && roles->size() == g.n_rows() ? *roles : detect_row_roles(g, {});
      sl->session.state = GridState{std::move(g), std::move(rr)};
    } catch (const Error& e) {
      warnings_.push_back("sample " + s.id + ": " + e.what());
      continue;
    }
    slots_.emplace(s.id, std::move(sl));
  }
}

AnnotatorService::Slot& AnnotatorService::slot(const std::string& id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw Error(ErrorCode::NotFound, "no sample with id \"" + id + "\"");
  return *it->second;
}

const AnnotatorService::Slot& AnnotatorService::slot(const std::string& id) const {
  return const_cast<AnnotatorService*>(this)->slot(id);
}

Response AnnotatorService::list_samples() const {
  json out = json::array();
  for (const Sample& s : samples_) {
    auto it = slots_.find(s.id);
    if (it == slots_.end()) continue;
    std::lock_guard lock(it->second->mu);
    out.push_back({{"id", s.id},
                   {"version", it->second->session.version},
                   {"dirty", it->second->session.dirty},
                   {"n_questions", s.questions.size()}});
  }
  return {200, {{"samples", out}}, {}, "application/json"};
}

Response AnnotatorService::get_sample(const std::string& id) const {
  try {
    const Slot& sl = slot(id);
    std::lock_guard lock(sl.mu);
    const Session& ss = sl.session;
    json qs = json::array();
    for (const auto& q : sl.sample->questions)
      qs.push_back({{"qid", q.qid}, {"text", q.text}, {"gold_category", to_string(q.gold_category)}, {"gold_answer", q.gold_answer}});
    json body{{"id", id},
              {"html", to_html(ss.state.grid)},
              {"grid", grid_json(ss.state.grid)},
              {"roles", roles_json(ss.state.roles)},
              {"version", ss.version},
              {"dirty", ss.dirty},
              {"questions", qs}};
    if (sl.sample->image_path) body["image_url"] = "/samples/" + id + "/image";
    return {200, body, {}, "application/json"};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotatorService::post_edit(const std::string& id, const json& body) {
  try {
    Slot& sl = slot(id);
    const uint64_t version = require_version(body);
    const EditOp op = edit_op_from_json(body.contains("edit") ? body.at("edit") : body);
    std::lock_guard lock(sl.mu);
    Session& ss = sl.session;
    if (version != ss.version)
      throw EditRejected(ErrorCode::StaleVersion,
                         "edit is based on version " + std::to_string(version) + " but the session is at " + std::to_string(ss.version),
                         "edits apply to the current version");
    ss.state = apply_edit(ss.state, op);
    ++ss.version;
    ss.dirty = true;
    return {200,
            {{"version", ss.version},
             {"dirty", true},
             {"html", to_html(ss.state.grid)},
             {"grid", grid_json(ss.state.grid)},
             {"roles", roles_json(ss.state.roles)}},
            {},
            "application/json"};
  } catch (const EditRejected& e) {
    return error_response(e, e.violated_invariant());
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotatorService::post_save(const std::string& id, const json& body) {
  try {
    Slot& sl = slot(id);
    const uint64_t version = require_version(body);
    std::lock_guard lock(sl.mu);
    Session& ss = sl.session;
    if (version != ss.version)
      throw EditRejected(ErrorCode::StaleVersion,
                         "save is based on version " + std::to_string(version) + " but the session is at " + std::to_string(ss.version),
                         "saves apply to the current version");
    fs::create_directories(annotation_dir());
    const fs::path html_path = annotation_dir() / (id + ".html");
    write_text(html_path, to_html(ss.state.grid));
    write_text(annotation_dir() / (id + ".roles.json"), roles_json(ss.state.roles).dump() + "\n");
    ++ss.version;
    ss.dirty = false;
    return {200, {{"version", ss.version}, {"dirty", false}, {"path", html_path.string()}}, {}, "application/json"};
  } catch (const EditRejected& e) {
    return error_response(e, e.violated_invariant());
  } catch (const Error& e) {
    return error_response(e);
  } catch (const fs::filesystem_error& e) {
    return error_response(Error(ErrorCode::FileUnreadable, e.what()));
  }
}

Response AnnotatorService::post_trace(const std::string& id, const json& body) const {
  try {
    const Slot& sl = slot(id);
    TableJson tj;
    size_t header_rows = 0;
    {
      std::lock_guard lock(sl.mu);
      tj = to_table_json(sl.session.state.grid, std::span<const RowRole>(sl.session.state.roles));
      header_rows = sl.session.state.grid.header_row_count();
    }
    if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
    json pj = body.contains("program_json") ? body.at("program_json") : body.value("program", json());
    if (pj.is_string()) pj = extract_json(pj.get<std::string>()).value_or(json());
    if (pj.is_object() && pj.contains("programs") && pj.at("programs").is_array() && !pj.at("programs").empty())
      pj = pj.at("programs").at(0);
    dsl::Program program;
    if (pj.is_array()) {
      program = dsl::parse_program(json{{"ops", pj}});
    } else if (pj.is_object()) {
      program = dsl::parse_program(pj);
    } else {
      program.parse_error = dsl::ExecError{dsl::ExecErrorKind::BadShape, "no program in request"};
    }
    QuestionCategory cat = QuestionCategory::other;
    if (body.contains("category") && body.at("category").is_string()) {
      auto c = category_from_string(body.at("category").get<std::string>());
      if (!c) throw Error(ErrorCode::InvalidArgument, "unknown category " + body.at("category").dump());
      cat = *c;
    }

    json out{{"header_row_count", header_rows}};
    if (auto err = dsl::validate(program, tj)) {
      out["ok"] = false;
      out["error"] = {{"kind", to_string(err->kind)}, {"message", err->describe()}};
      out["trace"] = nullptr;
      return {200, out, {}, "application/json"};
    }
    const dsl::Program normalized = dsl::normalize(program, cat);
    const dsl::ExecResult r = dsl::execute(normalized, tj);
    out["program"] = dsl::to_json(normalized);
    out["trace"] = dsl::to_json(r.trace);
    out["ok"] = r.ok();
    if (r.ok()) out["answer"] = r.answer();
    else out["error"] = {{"kind", to_string(r.error().kind)}, {"message", r.error().describe()}};
    json slots = json::array();
    for (const auto& c : r.trace.contributing_cells) {
      const auto col = tj.column(c.header);
      if (col) slots.push_back({{"row", header_rows + c.row - 1}, {"col", *col}});
    }
    out["contributing_slots"] = slots;
    return {200, out, {}, "application/json"};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotatorService::get_image(const std::string& id) const {
  try {
    const Slot& sl = slot(id);
    if (!sl.sample->image_path) throw Error(ErrorCode::NotFound, "sample " + id + " has no image");
    auto bytes = read_file(*sl.sample->image_path);
    if (!bytes) throw Error(ErrorCode::NotFound, "image file missing for sample " + id);
    return {200, nullptr, std::move(*bytes), mime_for(*sl.sample->image_path)};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotatorService::handle(const std::string& method, const std::string& path, const std::string& body) {
  auto parts = text::split(path, '/');
  std::erase_if(parts, [](const std::string& p) { return p.empty(); });
  auto bad = [](int status, const std::string& code, const std::string& msg) {
    return Response{status, {{"code", code}, {"message", msg}}, {}, "application/json"};
  };
  if (parts.empty() || parts[0] != "samples") return bad(404, "NotFound", "no route " + path);
  if (parts.size() == 1) return method == "GET" ? list_samples() : bad(405, "InvalidArgument", "method not allowed");
  const std::string& id = parts[1];
  if (parts.size() == 2) return method == "GET" ? get_sample(id) : bad(405, "InvalidArgument", "method not allowed");
  if (parts.size() != 3) return bad(404, "NotFound", "no route " + path);
  if (parts[2] == "image") return method == "GET" ? get_image(id) : bad(405, "InvalidArgument", "method not allowed");
  if (method != "POST") return bad(405, "InvalidArgument", "method not allowed");
  json j = json::parse(body.empty() ? "{}" : body, nullptr, false);
  if (j.is_discarded()) return bad(400, "InvalidArgument", "request body is not valid JSON");
  if (parts[2] == "edits") return post_edit(id, j);
  if (parts[2] == "save") return post_save(id, j);
  if (parts[2] == "trace") return post_trace(id, j);
  return bad(404, "NotFound", "no route " + path);
}

void AnnotatorService::mount(httplib::Server& server) {
  auto send = [](const Response& r, httplib::Response& res) {
    res.status = r.status;
    if (!r.raw.empty()) res.set_content(r.raw, r.content_type);
    else res.set_content(r.body.dump(), "application/json");
  };
  auto route = [this, send](const httplib::Request& req, httplib::Response& res) {
    send(handle(req.method, req.path, req.body), res);
  };
  server.Get(R"(/samples(/.*)?)", route);
  server.Post(R"(/samples/.*)", route);
}

void serve(AnnotatorService& svc, const std::string& host, int port) {
  httplib::Server server;
  svc.mount(server);
  if (!server.listen(host, port)) throw Error(ErrorCode::InvalidArgument, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace tablerouter::annot

#include "tablerouter/manifest.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/text.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace tablerouter {

using nlohmann::json;
namespace fs = std::filesystem;

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Sample sample_from_json(const json& j, const fs::path& base_dir, std::vector<std::string>* warnings) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "line is not a JSON object");
  Sample s;
  if (!j.contains("id")) throw Error(ErrorCode::InvalidArgument, "missing \"id\"");
  s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  if (j.contains("image") && j.at("image").is_string()) {
    fs::path img = j.at("image").get<std::string>();
    s.image_path = (img.is_relative() ? base_dir / img : img).string();
  }
  if (j.contains("gt_html") && j.at("gt_html").is_string()) {
    s.gt_html = j.at("gt_html").get<std::string>();
  } else if (j.contains("gt_html_file") && j.at("gt_html_file").is_string()) {
    fs::path f = j.at("gt_html_file").get<std::string>();
    if (f.is_relative()) f = base_dir / f;
    auto content = read_file(f);
    if (!content) throw Error(ErrorCode::FileUnreadable, "cannot read " + f.string());
    s.gt_html = std::move(*content);
  } else {
    throw Error(ErrorCode::InvalidArgument, "sample " + s.id + " has neither gt_html nor gt_html_file");
  }
  sanitize_html(s.gt_html);  // throws NoTableFound

  if (!j.contains("questions") || !j.at("questions").is_array())
    throw Error(ErrorCode::InvalidArgument, "sample " + s.id + " has no questions list");
  size_t expected = 1;
  for (const auto& q : j.at("questions")) {
    SampleQuestion sq;
    sq.qid = q.value("qid", expected);
    if (sq.qid != expected)
      throw Error(ErrorCode::InvalidArgument, "sample " + s.id + ": qids must be consecutive from 1");
    ++expected;
    sq.text = q.value("text", "");
    const std::string label = q.value("gold_category", "other");
    if (auto c = category_from_string(label)) {
      sq.gold_category = *c;
    } else {
      sq.gold_category = QuestionCategory::other;
      if (warnings) warnings->push_back("sample " + s.id + " q" + std::to_string(sq.qid) + ": unknown category \"" + label + "\" mapped to other");
    }
    if (q.contains("gold_answer")) {
      const json& a = q.at("gold_answer");
      sq.gold_answer = a.is_string() ? a.get<std::string>() : a.dump();
    }
    if (q.contains("program") && q.at("program").is_object()) sq.program = q.at("program");
    s.questions.push_back(std::move(sq));
  }
  if (j.contains("row_roles") && j.at("row_roles").is_array()) {
    std::vector<RowRole> roles;
    for (const auto& r : j.at("row_roles")) {
      auto role = r.is_string() ? row_role_from_string(r.get<std::string>()) : std::nullopt;
      if (!role) throw Error(ErrorCode::InvalidArgument, "sample " + s.id + ": bad row role " + r.dump());
      roles.push_back(*role);
    }
    s.row_roles = std::move(roles);
  }
  return s;
}

json to_json(const Sample& s) {
  json qs = json::array();
  for (const auto& q : s.questions) {
    json jq{{"qid", q.qid}, {"text", q.text}, {"gold_category", to_string(q.gold_category)}, {"gold_answer", q.gold_answer}};
    if (q.program) jq["program"] = *q.program;
    qs.push_back(std::move(jq));
  }
  json j{{"id", s.id}};
  if (s.image_path) j["image"] = *s.image_path;
  j["gt_html"] = s.gt_html;
  j["questions"] = qs;
  if (s.row_roles) {
    json roles = json::array();
    for (RowRole r : *s.row_roles) roles.push_back(to_string(r));
    j["row_roles"] = roles;
  }
  return j;
}

ManifestLoad load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read manifest " + path.string());
  const fs::path base = path.parent_path();
  ManifestLoad out;
  std::set<std::string> ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no) + ": ";
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      out.errors.push_back(where + "invalid JSON");
      continue;
    }
    try {
      Sample s = sample_from_json(j, base, &out.warnings);
      if (!ids.insert(s.id).second) {
        out.errors.push_back(where + "duplicate id " + s.id);
        continue;
      }
      out.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      out.errors.push_back(where + e.what());
    }
  }
  if (out.samples.empty()) throw Error(ErrorCode::EmptyManifest, "no usable samples in " + path.string());
  return out;
}

void write_manifest(const fs::path& path, const std::vector<Sample>& samples) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write " + path.string());
  for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

}  // namespace tablerouter

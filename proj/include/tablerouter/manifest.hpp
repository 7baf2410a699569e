#pragma once

#include "tablerouter/category.hpp"
#include "tablerouter/grid.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tablerouter {

struct SampleQuestion {
  size_t qid = 0;  // 1-based
  std::string text;
  QuestionCategory gold_category = QuestionCategory::other;
  std::string gold_answer;
  // Reference program for the question, when the generator knows one.
  std::optional<nlohmann::json> program;
};

struct Sample {
  std::string id;
  std::optional<std::string> image_path;  // opaque, resolved against the manifest dir
  std::string gt_html;
  std::vector<SampleQuestion> questions;
  // Ground-truth roles, one per grid row, when the manifest carries them.
  std::optional<std::vector<RowRole>> row_roles;
};

struct ManifestLoad {
  std::vector<Sample> samples;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;  // skipped lines
};

// One Sample per JSON line: {id, image?, gt_html | gt_html_file, questions:[{qid, text,
// gold_category, gold_answer}], row_roles?}. Bad lines are skipped and reported.
// Throws Error(FileUnreadable) or Error(EmptyManifest).
ManifestLoad load_manifest(const std::filesystem::path& path);

// Parses one manifest line. Relative file references resolve against base_dir.
Sample sample_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                        std::vector<std::string>* warnings = nullptr);
nlohmann::json to_json(const Sample& s);

void write_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples);

std::optional<std::string> read_file(const std::filesystem::path& path);

}  // namespace tablerouter

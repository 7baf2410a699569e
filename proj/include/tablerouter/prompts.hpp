#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tablerouter {

enum class Stage { tsr, direct_qa, route, plan, repair };

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

struct Decoding {
  double temperature = 0.0;
  double top_p = 1.0;
  double repetition_penalty = 1.1;
  int max_new_tokens = 1024;
};

int default_max_new_tokens(Stage s);

const std::vector<std::string>& default_stop_strings();

struct ChatRequest {
  Stage stage = Stage::direct_qa;
  std::string system;  // empty when merged into user
  std::string user;
  std::optional<std::string> image;  // raw bytes
  std::string image_mime = "image/png";
  Decoding decoding;
  std::vector<std::string> stop_strings;
};

struct PromptPayload {
  std::vector<std::string> questions;
  std::optional<std::string> table_json;  // compact JSON text
  std::vector<std::string> category_hints;
  // Oracle-HTML mode: ground-truth table markup replaces the image.
  std::optional<std::string> table_html;
  std::optional<size_t> qid;
  std::optional<std::string> category;
  std::optional<std::string> question;
  std::optional<std::string> error;
};

// Verbatim system and user templates of each stage.
std::string_view system_template(Stage s);
std::string_view user_template(Stage s);

// Renders the stage templates with the payload slots filled in. Throws
// Error(MissingSlot) when the stage needs a slot the payload lacks.
ChatRequest build_request(Stage stage, const PromptPayload& payload, bool merge_system = false);

}  // namespace tablerouter

#include "tablerouter/prompts.hpp"

#include "tablerouter/error.hpp"

#include "json.hpp"

namespace tablerouter {

namespace {


constexpr std::string_view k_tsr_system = R"PROMPT(You are a vision model that performs TABLE STRUCTURE RECOGNITION (TSR).
Given a document image, you must locate the main tabular region and convert it
into a clean HTML table that encodes the structure of rows, columns, and merged cells.

STRICT OUTPUT FORMAT:
- Output EXACTLY one HTML fragment: a single <table>...</table> element.
- Allowed tags: <table>, <thead>, <tbody>, <tr>, <td>.
- Allowed attributes: colspan, rowspan (positive integers).
- Forbidden: <th>, <caption>, <b>, <i>, <strong>, <em>, <span>, <div>, CSS classes,
  styles, IDs, HTML comments, or any text outside the <table> element.
- DO NOT wrap the table in <html> or <body>.
- DO NOT use ``` fences or language names (like ```html).

STRUCTURAL RULES:
- If the first visual row is a single cell spanning the entire table width (a title/banner),
  IGNORE that row and start from the true column header row.
- Put header row(s) inside <thead>; put all remaining rows inside <tbody>.
- Use one <td> per cell; use colspan/rowspan to represent merged cells so that the grid
  matches the visual layout of the table.
- Preserve the original row and column order. Do NOT reorder columns or rows.
- If there is clearly NO table, output: <table></table>
- If there is multiple tables, output only the first one.

CONTENT RULES:
- Inside each <td>, transcribe the cell text as printed (including accents and punctuation).
- Trim leading and trailing spaces inside cells.
- Keep empty cells as <td></td> when they visually exist, to preserve structure.
- Never invent rows or columns not supported by the image.)PROMPT";

constexpr std::string_view k_tsr_user = R"PROMPT(Identify the main table in the image and return ONLY its structure and cell contents
as a single HTML <table> that follows the strict rules given above.)PROMPT";

constexpr std::string_view k_direct_qa_system = R"PROMPT(You answer questions about a table in a document image.
The image contains a main tabular region. You must read the table and answer
each question precisely.

REQUIREMENTS:
- Base your answers only on the table in the image.
- Perform any arithmetic or aggregation that is needed.
- Answer concisely: no explanations, no reasoning steps.
- You MUST return a single JSON object with the following schema:
  {"answers": ["answer_for_question_1", "answer_for_question_2", ...]}
- The list must have EXACTLY as many answers as there are questions.
- Do NOT add commentary, natural language sentences, or Markdown fences.)PROMPT";

constexpr std::string_view k_direct_qa_user = R"PROMPT(You will be asked N questions about the table in the image.
Answer ALL questions and return ONLY valid JSON with this exact schema:
{"answers": ["answer_for_question_1", "answer_for_question_2", "..."]}
The answers array MUST be in the same order as the questions.

Questions:
Q1: ...
Q2: ...
...
QN: ...

Return only a JSON object with an 'answers' array. No extra text,
no Markdown, no explanations.)PROMPT";

constexpr std::string_view k_route_system = R"PROMPT(You classify table QA questions.
Choose EXACTLY ONE category label per question.
Return ONLY valid JSON with schema:
{"categories": ["label_for_q1", "label_for_q2", ...]}
No extra text.)PROMPT";

constexpr std::string_view k_route_user = R"PROMPT(Allowed categories:
lookup_by_header, lookup_list_by_header, kth_row_value, aggregation_sum,
aggregation_sum_conditional, comparison_argmax, comparison_argmax_rows,
count_equals, consistency_diff_total, total_row_value, na_from_empty, other

Questions:
Q1: ...
Q2: ...
...
QN: ...

Return ONLY JSON: {"categories": [..]} (same order).)PROMPT";

constexpr std::string_view k_plan_system = R"PROMPT(You write executable programs to answer questions about a table.
You will be given TABLE_JSON (headers + rows with row_role).
Return ONLY valid JSON.

IMPORTANT RULES:
- Use ONLY ops from the DSL list below.
- Use ONLY header strings that appear EXACTLY in TABLE_JSON.headers.
- Put context ops FIRST (EXCLUDE_ROLES / KEEP_ROLES / FILTER_EQ / SORT), then terminal ops.
- For non-total computations, exclude totals: EXCLUDE_ROLES(["total","subtotal"]).
- For TOTAL questions, use KEEP_ROLES(["total","subtotal"]) and then KTH_ROW.
- For ARGMAX returning a column, use return="col:<header>".
- Return ONLY JSON (no markdown, no explanation).

DSL ops:
- EXCLUDE_ROLES: {"op":"EXCLUDE_ROLES","roles":[...]}
- KEEP_ROLES:    {"op":"KEEP_ROLES","roles":[...]}
- FILTER_EQ:     {"op":"FILTER_EQ","col":"<header>","value":"<string>"}
- SORT:          {"op":"SORT","col":"<header>","order":"asc|desc","numeric":true|false}
- LOOKUP:        {"op":"LOOKUP","key_col":"<header>","key_value":"<string>",
"target_col":"<header>","mode":"first|all","empty_to_na":true|false}
- KTH_ROW:       {"op":"KTH_ROW","k":1|"last","target_col":"<header>","data_only":true|false}
- SUM:           {"op":"SUM","col":"<header>"}
- COUNT:         {"op":"COUNT","col":"<header>","value":"<string>"}
- ARGMAX:        {"op":"ARGMAX","col":"<header>","return":"row_index"|"col:<header>","all_ties":true|false}
- DIFF:          {"op":"DIFF","a":{...},"b":{...}}

Return ONLY JSON with schema: {"programs":[{"qid":1,"ops":[...]}, ...]}.)PROMPT";

constexpr std::string_view k_plan_user = R"PROMPT(TABLE_JSON:
{...}

CATEGORY_HINTS:
["...", "...", ...]

Questions:
Q1: ...
Q2: ...
...
QN: ...

Return ONLY JSON: {"programs":[...]} (qid is 1-based).)PROMPT";

constexpr std::string_view k_repair_system = R"PROMPT(You repair an invalid DSL program for a table question.
Return ONLY valid JSON: {"qid":<int>,"ops":[...]}
No extra text.)PROMPT";

constexpr std::string_view k_repair_user = R"PROMPT(TABLE_JSON:
{...}

QID: 1
CATEGORY: ...
QUESTION: ...
ERROR: ...

Return ONLY JSON: {"qid":..., "ops":[...]})PROMPT";

void replace_once(std::string& s, std::string_view from, std::string_view to) {
  const size_t pos = s.find(from);
  if (pos == std::string::npos) throw Error(ErrorCode::MissingSlot, "template slot not found: " + std::string(from));
  s.replace(pos, from.size(), to);
}

std::string question_lines(const std::vector<std::string>& qs) {
  std::string out;
  for (size_t i = 0; i < qs.size(); ++i) {
    if (i) out += '\n';
    out += "Q" + std::to_string(i + 1) + ": " + qs[i];
  }
  return out;
}

constexpr std::string_view kQuestionSlot = "Q1: ...\nQ2: ...\n...\nQN: ...";
constexpr std::string_view kTableSlot = "TABLE_JSON:\n{...}";

void require(bool ok, Stage s, std::string_view slot) {
  if (!ok) throw Error(ErrorCode::MissingSlot, std::string(to_string(s)) + " prompt needs " + std::string(slot));
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::tsr: return "tsr";
    case Stage::direct_qa: return "direct_qa";
    case Stage::route: return "route";
    case Stage::plan: return "plan";
    case Stage::repair: return "repair";
  }
  return "direct_qa";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (Stage st : {Stage::tsr, Stage::direct_qa, Stage::route, Stage::plan, Stage::repair})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

int default_max_new_tokens(Stage s) {
  switch (s) {
    case Stage::tsr: return 4096;
    case Stage::repair: return 512;
    default: return 1024;
  }
}

const std::vector<std::string>& default_stop_strings() {
  static const std::vector<std::string> stops = {"```", "<|im_end|>", "<|eot_id|>", "<|end|>", "</s>"};
  return stops;
}

std::string_view system_template(Stage s) {
  switch (s) {
    case Stage::tsr: return k_tsr_system;
    case Stage::direct_qa: return k_direct_qa_system;
    case Stage::route: return k_route_system;
    case Stage::plan: return k_plan_system;
    case Stage::repair: return k_repair_system;
  }
  return {};
}

std::string_view user_template(Stage s) {
  switch (s) {
    case Stage::tsr: return k_tsr_user;
    case Stage::direct_qa: return k_direct_qa_user;
    case Stage::route: return k_route_user;
    case Stage::plan: return k_plan_user;
    case Stage::repair: return k_repair_user;
  }
  return {};
}

ChatRequest build_request(Stage stage, const PromptPayload& payload, bool merge_system) {
  ChatRequest req;
  req.stage = stage;
  req.decoding.max_new_tokens = default_max_new_tokens(stage);
  req.stop_strings = default_stop_strings();
  std::string user(user_template(stage));

  switch (stage) {
    case Stage::tsr:
      break;
    case Stage::direct_qa:
      require(!payload.questions.empty(), stage, "at least one question");
      replace_once(user, "asked N questions", "asked " + std::to_string(payload.questions.size()) + " questions");
      replace_once(user, kQuestionSlot, question_lines(payload.questions));
      if (payload.table_html) user = "TABLE_HTML:\n" + *payload.table_html + "\n\n" + user;
      break;
    case Stage::route:
      require(!payload.questions.empty(), stage, "at least one question");
      replace_once(user, kQuestionSlot, question_lines(payload.questions));
      break;
    case Stage::plan: {
      require(!payload.questions.empty(), stage, "at least one question");
      require(payload.table_json.has_value(), stage, "TABLE_JSON");
      require(payload.category_hints.size() == payload.questions.size(), stage, "one CATEGORY_HINTS entry per question");
      replace_once(user, kTableSlot, "TABLE_JSON:\n" + *payload.table_json);
      replace_once(user, R"(["...", "...", ...])", nlohmann::json(payload.category_hints).dump());
      replace_once(user, kQuestionSlot, question_lines(payload.questions));
      break;
    }
    case Stage::repair:
      require(payload.table_json.has_value(), stage, "TABLE_JSON");
      require(payload.qid.has_value(), stage, "QID");
      require(payload.category.has_value(), stage, "CATEGORY");
      require(payload.question.has_value(), stage, "QUESTION");
      require(payload.error.has_value(), stage, "ERROR");
      replace_once(user, kTableSlot, "TABLE_JSON:\n" + *payload.table_json);
      replace_once(user, "QID: 1\nCATEGORY: ...\nQUESTION: ...\nERROR: ...",
                   "QID: " + std::to_string(*payload.qid) + "\nCATEGORY: " + *payload.category +
                       "\nQUESTION: " + *payload.question + "\nERROR: " + *payload.error);
      break;
  }

  if (merge_system) {
    req.user = std::string(system_template(stage)) + "\n\n" + user;
  } else {
    req.system = std::string(system_template(stage));
    req.user = std::move(user);
  }
  return req;
}

}  // namespace tablerouter

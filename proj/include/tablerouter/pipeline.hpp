#pragma once

#include "tablerouter/dsl.hpp"
#include "tablerouter/executor.hpp"
#include "tablerouter/gateway.hpp"
#include "tablerouter/grid.hpp"
#include "tablerouter/manifest.hpp"
#include "tablerouter/table_json.hpp"

#include "json.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace tablerouter {

enum class TableSource { image_model, oracle_html };

std::string_view to_string(TableSource s);
std::optional<TableSource> table_source_from_string(std::string_view s);

enum class PipelineStage { direct_qa, tsr_serialize, route, plan, execute, repair };
inline constexpr size_t kPipelineStageCount = 6;
inline constexpr std::array<PipelineStage, kPipelineStageCount> kPipelineStages = {
    PipelineStage::direct_qa, PipelineStage::tsr_serialize, PipelineStage::route,
    PipelineStage::plan,      PipelineStage::execute,       PipelineStage::repair};
std::string_view to_string(PipelineStage s);

struct StageTimings {
  std::array<double, kPipelineStageCount> seconds{};
  double total = 0.0;  // wall clock of the whole run

  double& operator[](PipelineStage s) { return seconds[static_cast<size_t>(s)]; }
  double operator[](PipelineStage s) const { return seconds[static_cast<size_t>(s)]; }
  double stage_sum() const;
};

struct PipelineConfig {
  int max_repair_rounds = 1;
  bool routing = true;        // false: direct answers only, no program branch
  bool direct_only = false;   // skip routing and programs entirely (vqa-direct)
  bool gold_category_hints = false;
  bool merge_system = false;
  dsl::FormatPolicy format;
  RoleKeywordConfig keywords;

  static PipelineConfig from_json(const nlohmann::json& j);
};

struct QuestionResult {
  size_t qid = 0;
  std::string question;
  std::string baseline;
  QuestionCategory predicted_category = QuestionCategory::other;
  bool routed = false;
  std::optional<dsl::Program> program;
  std::optional<dsl::ExecResult> exec;
  std::optional<dsl::ExecError> error;  // last failure, when no successful execution
  int repair_rounds = 0;
  std::string final;
  bool overridden = false;
};

struct PipelineResult {
  std::string sample_id;
  std::vector<QuestionResult> questions;
  StageTimings timings;
  std::optional<TableJson> table;  // built only when a question was routed
};

struct OverrideDecision {
  std::string final;
  bool overridden = false;
};

OverrideDecision decide_override(const std::string& baseline, const std::optional<dsl::ExecResult>& outcome,
                                 const TableJson& table);

// One repair call; absent when rounds are exhausted or the reply does not
// yield a valid program.
std::optional<dsl::Program> repair(const dsl::ExecError& err, const std::optional<dsl::ExecTrace>& trace,
                                   const TableJson& t, size_t qid, QuestionCategory category,
                                   const std::string& question, ModelGateway& model, int rounds_left,
                                   bool merge_system = false);

// Direct answers from a reply; all empty when the answer count is wrong.
std::vector<std::string> parse_answers(std::string_view reply, size_t n);
// Routed categories from a reply; all `other` when the count is wrong.
std::vector<QuestionCategory> parse_categories(std::string_view reply, size_t n);

// Ground-truth or model table, sanitized and parsed; empty on failure.
TableJson build_table_json(const std::string& html, const std::optional<std::vector<RowRole>>& roles,
                           const RoleKeywordConfig& keywords);

PipelineResult run_pipeline(const Sample& sample, ModelGateway& model, TableSource source,
                            const PipelineConfig& cfg = {});

// Runs samples on a bounded worker pool; results keep manifest order.
std::vector<PipelineResult> run_batch(const std::vector<Sample>& samples, ModelGateway& model,
                                      TableSource source, const PipelineConfig& cfg, unsigned workers);

// One record per question.
std::vector<nlohmann::json> to_records(const PipelineResult& r);
nlohmann::json to_json(const StageTimings& t);

}  // namespace tablerouter

#pragma once

#include "tablerouter/amount.hpp"
#include "tablerouter/category.hpp"
#include "tablerouter/manifest.hpp"
#include "tablerouter/pipeline.hpp"

#include "json.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace tablerouter {

struct NormalizedAnswer {
  enum class Kind { number, list, text, na };
  Kind kind = Kind::text;
  Decimal number;
  std::vector<NormalizedAnswer> items;  // sorted by canonical()
  std::string text;

  // Stable textual form; normalize_answer(canonical()) == *this.
  std::string canonical() const;
  friend bool operator==(const NormalizedAnswer& a, const NormalizedAnswer& b);
};

NormalizedAnswer normalize_answer(std::string_view raw);
bool exact_match(std::string_view pred, std::string_view gold);

struct CategoryScore {
  size_t n = 0;
  size_t correct = 0;
  double em() const { return n ? 100.0 * static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

struct Throughput {
  double runtime_seconds = 0.0;  // summed pipeline wall clock
  double direct_seconds = 0.0;
  double overhead_e2e = 0.0;
  double qps = 0.0;
  std::array<double, kPipelineStageCount> stage_seconds{};
  // Share of each non-direct stage in the non-direct time; direct_qa is 0.
  std::array<double, kPipelineStageCount> stage_fractions{};
};

struct EvalReport {
  std::array<CategoryScore, kCategoryCount> per_category{};
  std::vector<QuestionCategory> included;
  double overall = 0.0;
  size_t n_questions = 0;
  std::optional<std::array<std::optional<double>, kCategoryCount>> deltas;
  std::optional<double> overall_delta;
  double route_acc = 0.0;
  std::array<std::array<size_t, kCategoryCount>, kCategoryCount> confusion_counts{};
  Throughput throughput;

  double confusion(QuestionCategory gold, QuestionCategory pred) const;
  const CategoryScore& operator[](QuestionCategory c) const { return per_category[category_index(c)]; }
};

struct AggregateOptions {
  bool score_baseline = false;  // score A_base instead of the final answers
  std::vector<QuestionCategory> categories;  // empty: all
  const EvalReport* baseline = nullptr;      // for deltas
  std::optional<double> direct_seconds;      // separate direct-QA run time
};

// Throws Error(MissingGold) when a result has no matching gold question.
EvalReport aggregate(const std::vector<PipelineResult>& results, const std::vector<Sample>& samples,
                     const AggregateOptions& opts = {});

// Weighted overall over a category subset.
double weighted_overall(const EvalReport& r, const std::vector<QuestionCategory>& categories);

nlohmann::json to_json(const EvalReport& r);
std::string format_report_table(const EvalReport& r, std::string_view title);
std::string confusion_csv(const EvalReport& r);

}  // namespace tablerouter

#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace tablerouter {

enum class QuestionCategory {
  lookup_by_header,
  lookup_list_by_header,
  kth_row_value,
  na_from_empty,
  total_row_value,
  aggregation_sum,
  aggregation_sum_conditional,
  comparison_argmax,
  comparison_argmax_rows,
  count_equals,
  consistency_diff_total,
  other,
};

inline constexpr size_t kCategoryCount = 12;

inline constexpr std::array<QuestionCategory, kCategoryCount> kAllCategories = {
    QuestionCategory::lookup_by_header,      QuestionCategory::lookup_list_by_header,
    QuestionCategory::kth_row_value,         QuestionCategory::na_from_empty,
    QuestionCategory::total_row_value,       QuestionCategory::aggregation_sum,
    QuestionCategory::aggregation_sum_conditional, QuestionCategory::comparison_argmax,
    QuestionCategory::comparison_argmax_rows, QuestionCategory::count_equals,
    QuestionCategory::consistency_diff_total, QuestionCategory::other,
};

std::string_view to_string(QuestionCategory c);
std::optional<QuestionCategory> category_from_string(std::string_view s);

// Short column label used in report tables ("Sum", "Sum-C", ...).
std::string_view short_label(QuestionCategory c);

// The four categories routed to program execution.
constexpr bool is_starred(QuestionCategory c) {
  return c == QuestionCategory::aggregation_sum ||
         c == QuestionCategory::aggregation_sum_conditional ||
         c == QuestionCategory::count_equals || c == QuestionCategory::consistency_diff_total;
}

constexpr size_t category_index(QuestionCategory c) { return static_cast<size_t>(c); }

}  // namespace tablerouter

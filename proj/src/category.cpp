#include "tablerouter/category.hpp"

namespace tablerouter {

std::string_view to_string(QuestionCategory c) {
  switch (c) {
    case QuestionCategory::lookup_by_header: return "lookup_by_header";
    case QuestionCategory::lookup_list_by_header: return "lookup_list_by_header";
    case QuestionCategory::kth_row_value: return "kth_row_value";
    case QuestionCategory::na_from_empty: return "na_from_empty";
    case QuestionCategory::total_row_value: return "total_row_value";
    case QuestionCategory::aggregation_sum: return "aggregation_sum";
    case QuestionCategory::aggregation_sum_conditional: return "aggregation_sum_conditional";
    case QuestionCategory::comparison_argmax: return "comparison_argmax";
    case QuestionCategory::comparison_argmax_rows: return "comparison_argmax_rows";
    case QuestionCategory::count_equals: return "count_equals";
    case QuestionCategory::consistency_diff_total: return "consistency_diff_total";
    case QuestionCategory::other: return "other";
  }
  return "other";
}

std::optional<QuestionCategory> category_from_string(std::string_view s) {
  for (QuestionCategory c : kAllCategories)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::string_view short_label(QuestionCategory c) {
  switch (c) {
    case QuestionCategory::aggregation_sum: return "Sum";
    case QuestionCategory::aggregation_sum_conditional: return "Sum-C";
    case QuestionCategory::total_row_value: return "Total";
    case QuestionCategory::comparison_argmax: return "ArgMax";
    case QuestionCategory::comparison_argmax_rows: return "ArgMax-R";
    case QuestionCategory::consistency_diff_total: return "Diff";
    case QuestionCategory::count_equals: return "Eq";
    case QuestionCategory::lookup_by_header: return "Lookup";
    case QuestionCategory::lookup_list_by_header: return "Lookup-L";
    case QuestionCategory::kth_row_value: return "Kth";
    case QuestionCategory::na_from_empty: return "N/A";
    case QuestionCategory::other: return "Other";
  }
  return "Other";
}

}  // namespace tablerouter

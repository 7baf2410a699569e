#pragma once

#include "tablerouter/category.hpp"
#include "tablerouter/manifest.hpp"

#include "json.hpp"

#include <array>
#include <ostream>
#include <string>
#include <vector>

namespace tablerouter::cli {

struct CorpusStats {
  size_t n_samples = 0;
  size_t n_questions = 0;
  double median_rows = 0.0;  // grid rows, header rows included
  double median_cols = 0.0;
  double spanning_prevalence = 0.0;  // percent of tables with a merged cell
  std::array<size_t, kCategoryCount> per_category{};
};

CorpusStats corpus_stats(const std::vector<Sample>& samples);
nlohmann::json to_json(const CorpusStats& s);

// Parses a comma list of category labels; "starred" expands to the four
// program categories. Throws Error(InvalidArgument) on unknown labels.
std::vector<QuestionCategory> parse_category_filter(const std::string& spec);

// Runs one CLI invocation (args exclude the program name) and returns the
// exit status. Failures print a JSON error record to `err` and, when an
// output directory was given, to error.json there.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tablerouter::cli

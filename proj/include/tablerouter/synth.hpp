#pragma once

#include "tablerouter/amount.hpp"
#include "tablerouter/category.hpp"
#include "tablerouter/manifest.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tablerouter {

// Portable bounded draws over mt19937_64 so a seed gives the same corpus on
// every standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}
  uint64_t next() { return eng_(); }
  // Uniform in [lo, hi].
  long long uniform(long long lo, long long hi);
  // Uniform in [0, 1).
  double unit();
  bool bernoulli(double p) { return unit() < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(uniform(0, static_cast<long long>(v.size()) - 1))];
  }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<size_t>(uniform(0, static_cast<long long>(i) - 1))]);
  }

 private:
  std::mt19937_64 eng_;
};

struct SynthConfig {
  size_t n_samples = 100;
  size_t rows_min = 3;  // data rows
  size_t rows_max = 8;
  size_t amount_cols_min = 1;
  size_t amount_cols_max = 3;
  double span_probability = 0.65;
  double subtotal_probability = 0.4;
  double total_probability = 0.8;
  double inconsistent_total_probability = 0.5;
  double empty_tooth_probability = 0.25;
  double grouping_probability = 0.2;  // "1 234,56" style amounts
  Convention convention = Convention::comma_decimal;
  std::array<double, kCategoryCount> category_weights{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0};
  size_t questions_per_sample = 4;
  size_t kth_max = 3;
  uint64_t seed = 7;

  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct GeneratedSample {
  Sample sample;
  // A plausible wrong direct answer per question (e.g. a sum that includes
  // subtotal rows), used to script baselines.
  std::vector<std::string> naive_answers;
  bool has_spanning_cell = false;
};

// Throws Error(InfeasibleConfig) for contradictory settings.
void validate(const SynthConfig& cfg);

std::vector<GeneratedSample> generate_synthetic(const SynthConfig& cfg);

// Act labels the generator draws line items from.
const std::vector<std::string>& dental_acts();

// Scripted replies for a perfect router and planner: direct answers are the
// naive answers, categories are gold, programs are the reference programs.
nlohmann::json perfect_script(const std::vector<GeneratedSample>& samples, bool include_tsr_html = false);

}  // namespace tablerouter

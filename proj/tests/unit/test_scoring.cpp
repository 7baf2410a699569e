#include "doctest.h"

#include "tablerouter/error.hpp"
#include "tablerouter/scoring.hpp"
#include "tablerouter/synth.hpp"

using namespace tablerouter;

namespace {

Sample sample_with(const std::string& id, const std::vector<std::pair<QuestionCategory, std::string>>& qs) {
  Sample s;
  s.id = id;
  s.gt_html = "<table><tr><td>a</td></tr></table>";
  for (size_t i = 0; i < qs.size(); ++i) s.questions.push_back({i + 1, "q", qs[i].first, qs[i].second, std::nullopt});
  return s;
}

QuestionResult answer(size_t qid, const std::string& baseline, const std::string& final, QuestionCategory pred) {
  QuestionResult q;
  q.qid = qid;
  q.baseline = baseline;
  q.final = final;
  q.predicted_category = pred;
  return q;
}

}  // namespace

TEST_CASE("answer normalization") {
  CHECK(exact_match("90,00", "90.00"));
  CHECK(exact_match("90,00 €", "90"));
  CHECK(exact_match("EUR 1 234,50", "1234.5"));
  CHECK(exact_match("  Détartrage ", "detartrage"));
  CHECK(exact_match("Composite; Couronne", "couronne, composite"));
  CHECK(exact_match("N/A", "na"));
  CHECK(exact_match("Non applicable", "n/a"));
  CHECK_FALSE(exact_match("90,01", "90,00"));
  CHECK_FALSE(exact_match("Composite", "Composite; Couronne"));
  CHECK_FALSE(exact_match("", "0"));
  CHECK(exact_match("Europe", "europe"));
}

TEST_CASE("canonical form is a fixpoint") {
  Rng rng(6);
  const std::vector<std::string> pool = {"90,00", "1 234,5 €", "Soins; Chirurgie", "N/A", "Détartrage", "3", "-2.50",
                                         "a/b", "12 %", "x, 4,00"};
  for (const auto& s : pool) {
    const auto n = normalize_answer(s);
    CHECK_MESSAGE(normalize_answer(n.canonical()) == n, s);
  }
  for (int i = 0; i < 500; ++i) {
    const Decimal d(BigInt(rng.uniform(-1'000'000, 1'000'000)), static_cast<unsigned>(rng.uniform(0, 2)));
    const auto n = normalize_answer(format_amount(d, Convention::comma_decimal, 2));
    CHECK(normalize_answer(n.canonical()) == n);
  }
}

TEST_CASE("aggregate scores per category") {
  const std::vector<Sample> samples = {
      sample_with("s1", {{QuestionCategory::aggregation_sum, "90,00"}, {QuestionCategory::lookup_by_header, "40,00"}}),
      sample_with("s2", {{QuestionCategory::aggregation_sum, "10,00"}, {QuestionCategory::count_equals, "2"}})};
  std::vector<PipelineResult> results(2);
  results[0].sample_id = "s1";
  results[0].questions = {answer(1, "180,00", "90,00", QuestionCategory::aggregation_sum),
                          answer(2, "40,00", "40,00", QuestionCategory::lookup_by_header)};
  results[0].timings.total = 2.0;
  results[0].timings[PipelineStage::direct_qa] = 1.0;
  results[0].timings[PipelineStage::plan] = 0.5;
  results[0].timings[PipelineStage::route] = 0.25;
  results[1].sample_id = "s2";
  results[1].questions = {answer(1, "10,00", "11,00", QuestionCategory::aggregation_sum),
                          answer(2, "3", "2", QuestionCategory::other)};
  results[1].timings.total = 2.0;
  results[1].timings[PipelineStage::direct_qa] = 1.0;
  results[1].timings[PipelineStage::execute] = 0.25;

  const EvalReport base = aggregate(results, samples, {.score_baseline = true});
  CHECK(base[QuestionCategory::aggregation_sum].correct == 1);
  CHECK(base[QuestionCategory::count_equals].correct == 0);
  CHECK(base.overall == doctest::Approx(50.0));

  const EvalReport fin = aggregate(results, samples, {.baseline = &base});
  CHECK(fin[QuestionCategory::aggregation_sum].em() == doctest::Approx(50.0));
  CHECK(fin[QuestionCategory::count_equals].em() == doctest::Approx(100.0));
  CHECK(fin.overall == doctest::Approx(75.0));
  REQUIRE(fin.deltas);
  CHECK(*(*fin.deltas)[category_index(QuestionCategory::count_equals)] == doctest::Approx(100.0));
  CHECK_FALSE((*fin.deltas)[category_index(QuestionCategory::other)]);
  CHECK(*fin.overall_delta == doctest::Approx(25.0));
  CHECK(fin.route_acc == doctest::Approx(75.0));
  CHECK(fin.confusion(QuestionCategory::count_equals, QuestionCategory::other) == 1.0);

  const Throughput& tp = fin.throughput;
  CHECK(tp.runtime_seconds == doctest::Approx(4.0));
  CHECK(tp.qps == doctest::Approx(1.0));
  CHECK(tp.overhead_e2e == doctest::Approx(2.0));
  CHECK(tp.stage_fractions[static_cast<size_t>(PipelineStage::plan)] == doctest::Approx(0.5));
  double sum = 0;
  for (double f : tp.stage_fractions) sum += f;
  CHECK(sum == doctest::Approx(1.0));

  const EvalReport starred = aggregate(results, samples,
                                       {.categories = {QuestionCategory::aggregation_sum, QuestionCategory::count_equals}});
  CHECK(starred.n_questions == 3);
  CHECK(starred.overall == doctest::Approx(200.0 / 3.0));
  CHECK(weighted_overall(fin, {QuestionCategory::lookup_by_header}) == doctest::Approx(100.0));

  const auto j = to_json(fin);
  CHECK(j["per_category"]["aggregation_sum"]["n"] == 2);
  CHECK(j["confusion"]["matrix"].size() == kCategoryCount);
  CHECK(format_report_table(fin, "Router").find("Router") != std::string::npos);
  CHECK(confusion_csv(fin).find("count_equals") != std::string::npos);
}

TEST_CASE("missing gold is an error") {
  const std::vector<Sample> samples = {sample_with("s1", {{QuestionCategory::other, "x"}})};
  std::vector<PipelineResult> results(1);
  results[0].sample_id = "nope";
  CHECK_THROWS_AS(aggregate(results, samples), Error);
  results[0].sample_id = "s1";
  results[0].questions = {answer(7, "", "", QuestionCategory::other)};
  CHECK_THROWS_AS(aggregate(results, samples), Error);
}

TEST_CASE("confusion rows are normalized") {
  std::vector<Sample> samples;
  std::vector<PipelineResult> results;
  for (int i = 0; i < 10; ++i) {
    samples.push_back(sample_with("s" + std::to_string(i), {{QuestionCategory::aggregation_sum, "1"}}));
    PipelineResult r;
    r.sample_id = samples.back().id;
    r.questions = {answer(1, "1", "1", i < 3 ? QuestionCategory::count_equals : QuestionCategory::aggregation_sum)};
    results.push_back(r);
  }
  const auto rep = aggregate(results, samples);
  CHECK(rep.route_acc == doctest::Approx(70.0));
  CHECK(rep.confusion(QuestionCategory::aggregation_sum, QuestionCategory::count_equals) == doctest::Approx(0.3));
  CHECK(rep.confusion(QuestionCategory::aggregation_sum, QuestionCategory::aggregation_sum) == doctest::Approx(0.7));
  CHECK(rep.confusion(QuestionCategory::other, QuestionCategory::other) == 0.0);
}

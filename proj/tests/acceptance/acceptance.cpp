// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include "oracles.hpp"
#include "tablerouter/amount.hpp"
#include "tablerouter/dsl.hpp"
#include "tablerouter/executor.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/pipeline.hpp"
#include "tablerouter/scoring.hpp"
#include "tablerouter/synth.hpp"
#include "tablerouter/tsr_metrics.hpp"
#include "tablerouter/tree_edit.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace tablerouter;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream why;

  void expect(bool cond, const std::string& msg) {
    if (!cond && ok) why << msg;
    ok = ok && cond;
  }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<GeneratedSample> corpus(size_t n, uint64_t seed) {
  SynthConfig cfg;
  cfg.n_samples = n;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

std::vector<Sample> samples_of(const std::vector<GeneratedSample>& gen) {
  std::vector<Sample> out;
  for (const auto& g : gen) out.push_back(g.sample);
  return out;
}

void subtotal_golden(Check& c) {
  const auto start = Clock::now();
  const auto manifest = load_manifest(std::string(SOURCE_DIR) + "/configs/subtotal/manifest.jsonl");
  auto gw = ScriptedGateway::from_file(std::string(SOURCE_DIR) + "/configs/subtotal/script.json");
  const auto r = run_pipeline(manifest.samples.at(0), *gw, TableSource::oracle_html);
  const double elapsed = seconds_since(start);
  const auto& q = r.questions.at(0);
  c.expect(q.baseline == "180,00", "baseline " + q.baseline);
  c.expect(q.final == "90,00", "final " + q.final);
  c.expect(q.overridden, "not overridden");
  c.expect(q.exec.has_value(), "no execution");
  if (q.exec && r.table) {
    const auto& step = q.exec->trace.steps.at(0);
    c.expect(step.op == "EXCLUDE_ROLES", "first step " + step.op);
    for (size_t idx : step.rows_in) {
      const bool subtotal = r.table->rows.at(idx - 1).role == RowRole::subtotal;
      const bool kept = std::find(step.rows_out.begin(), step.rows_out.end(), idx) != step.rows_out.end();
      c.expect(subtotal != kept, "row " + std::to_string(idx) + " handled wrongly");
    }
  }
  c.expect(elapsed < 1.0, "runtime " + std::to_string(elapsed) + " s");
  c.why << (c.ok ? "final 90,00, subtotal excluded, " + std::to_string(elapsed) + " s" : "");
}

void dsl_oracle(Check& c) {
  const auto start = Clock::now();
  const auto gen = corpus(1000, 20240);
  Rng rng(555);
  std::set<QuestionCategory> seen;
  size_t starred = 0, starred_ok = 0, compared = 0, agreed = 0;
  std::string first_bad;
  for (const auto& g : gen) {
    const TableJson t = build_table_json(g.sample.gt_html, g.sample.row_roles, {});
    const json tj = to_json(t);
    const char mark = detect_convention(t.all_cells()) == Convention::comma_decimal ? ',' : '.';
    std::vector<json> programs;
    for (const auto& q : g.sample.questions) {
      seen.insert(q.gold_category);
      if (!q.program) continue;
      const dsl::Program p = dsl::normalize(dsl::parse_program(*q.program), q.gold_category);
      const auto r = dsl::execute(p, t);
      if (is_starred(q.gold_category)) {
        ++starred;
        if (r.ok() && r.answer() == q.gold_answer) ++starred_ok;
        else if (first_bad.empty()) first_bad = g.sample.id + ": " + q.text;
      }
      programs.push_back(dsl::to_json(p));
    }
    for (int i = 0; i < 5; ++i) programs.push_back(oracle::random_program(tj, rng));
    for (const auto& wire : programs) {
      ++compared;
      const auto mine = dsl::execute(dsl::parse_program(wire), t);
      const auto ref = oracle::run_program(wire, tj, mark);
      const bool same = mine.ok() == ref.ok &&
                        (ref.ok ? mine.answer() == ref.answer : std::string(dsl::to_string(mine.error().kind)) == ref.error_kind);
      if (same) ++agreed;
      else if (first_bad.empty()) first_bad = g.sample.id + ": " + wire.dump();
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(seen.size() == 11, std::to_string(seen.size()) + " categories seen; ");
  c.expect(starred > 0 && starred_ok == starred,
           "starred " + std::to_string(starred_ok) + "/" + std::to_string(starred) + " " + first_bad + "; ");
  c.expect(agreed == compared, "oracle " + std::to_string(agreed) + "/" + std::to_string(compared) + " " + first_bad + "; ");
  c.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + " s");
  if (c.ok)
    c.why << "1000 fixtures, " << starred << " starred programs exact, " << compared << " programs match the evaluator, "
          << elapsed << " s";
}

void fallback_safety(Check& c) {
  const auto manifest = load_manifest(std::string(SOURCE_DIR) + "/configs/subtotal/manifest.jsonl");
  const Sample& s = manifest.samples.at(0);
  Rng rng(4242);
  size_t failures = 0, crashes = 0;
  for (int i = 0; i < 500; ++i) {
    PipelineConfig cfg;
    cfg.max_repair_rounds = static_cast<int>(rng.uniform(0, 1));
    json entries = json::array({{{"stage", "direct_qa"}, {"reply", R"({"answers":["180,00","40,00"]})"}},
                                {{"stage", "route"}, {"reply", R"({"categories":["aggregation_sum","lookup_by_header"]})"}},
                                {{"stage", "plan"}, {"reply", oracle::fuzz_planner_output(rng, {"Acte", "Honoraires"})}}});
    if (cfg.max_repair_rounds)
      entries.push_back({{"stage", "repair"}, {"reply", oracle::fuzz_planner_output(rng, {"Acte", "Honoraires"})}});
    auto gw = ScriptedGateway::from_json(entries);
    try {
      const auto r = run_pipeline(s, *gw, TableSource::oracle_html, cfg);
      if (r.questions.at(0).final != "180,00" || r.questions.at(0).overridden) ++failures;
    } catch (...) {
      ++crashes;
    }
  }
  c.expect(failures == 0, std::to_string(failures) + " outputs left the baseline; ");
  c.expect(crashes == 0, std::to_string(crashes) + " crashes");
  if (c.ok) c.why << "500 fuzzed outputs, baseline kept every time, 0 crashes";
}

void tree_edit(Check& c) {
  Rng rng(8080);
  size_t equal = 0;
  for (int i = 0; i < 200; ++i) {
    const TreeNode a = oracle::random_tree(rng, 8);
    const TreeNode b = oracle::random_tree(rng, 8);
    const CostModel m = i % 2 ? CostModel::structure : CostModel::content;
    const auto fast = tree_edit_distance_as<oracle::Rational>(&a, &b, m, [](const LabelCost& lc) {
      return oracle::Rational(oracle::Int(lc.num), oracle::Int(lc.den));
    });
    if (fast == oracle::exhaustive_ted(a, b, m)) ++equal;
  }
  c.expect(equal == 200, "TED exact on " + std::to_string(equal) + "/200; ");
  size_t self_ok = 0, invariant_ok = 0;
  for (int i = 0; i < 500; ++i) {
    const TableGrid g = oracle::random_grid(rng, 6, 6, 0.3);
    const std::string html = to_html(g);
    if (teds(html, html, false).value == 1.0) ++self_ok;
    auto anchors = g.anchors();
    for (auto& a : anchors) a.text = "x" + std::to_string(rng.uniform(0, 999));
    const auto retexted = TableGrid::from_anchors(g.n_rows(), g.n_cols(), anchors, g.header_row_count());
    if (retexted && teds(to_html(*retexted), html, true).value == 1.0) ++invariant_ok;
  }
  c.expect(self_ok == 500, "TEDS(x,x)=1 on " + std::to_string(self_ok) + "/500; ");
  c.expect(invariant_ok == 500, "S-TEDS invariant on " + std::to_string(invariant_ok) + "/500");
  if (c.ok) c.why << "200 pairs exact, TEDS(x,x)=1 and S-TEDS text invariance on 500 tables";
}

void adjacency_grits(Check& c) {
  Rng rng(1717);
  size_t self_ok = 0, range_ok = 0;
  for (int i = 0; i < 500; ++i) {
    const TableGrid a = oracle::random_grid(rng, 6, 6, 0.3);
    const TableGrid b = oracle::random_grid(rng, 6, 6, 0.3);
    if (adjacency_f1(a, a).value == 1.0 && std::abs(grits_top(a, a).value - 1.0) <= 1e-12) ++self_ok;
    bool in = true;
    for (double v : {adjacency_f1(a, b).value, grits_top(a, b).value, adjacency_f1(b, a).value, grits_top(b, a).value})
      in = in && v >= 0.0 && v <= 1.0;
    if (in) ++range_ok;
  }
  c.expect(self_ok == 500, "self score 1 on " + std::to_string(self_ok) + "/500; ");
  c.expect(range_ok == 500, "range ok on " + std::to_string(range_ok) + "/500; ");
  size_t pairs = 0, equal = 0;
  double worst = 0.0;
  for (auto [r, col] : {std::pair<size_t, size_t>{2, 2}, {2, 3}}) {
    const auto grids = oracle::all_partitions(r, col);
    for (const auto& a : grids)
      for (const auto& b : grids) {
        ++pairs;
        const double d = std::abs(grits_top(a, b).value - oracle::exhaustive_grits_top(a, b));
        worst = std::max(worst, d);
        if (d <= 1e-9) ++equal;
      }
  }
  c.expect(equal == pairs, "GriTS-top matches exhaustive on " + std::to_string(equal) + "/" + std::to_string(pairs) +
                               " (max diff " + std::to_string(worst) + ")");
  if (c.ok) c.why << "500 tables, " << pairs << " small-grid pairs equal the exhaustive oracle";
}

void exact_decimal(Check& c) {
  Rng rng(31337);
  std::vector<Decimal> xs;
  for (int i = 0; i < 10000; ++i) xs.push_back(Decimal(BigInt(rng.uniform(-9'999'999, 9'999'999)), 2));
  Decimal first;
  for (const auto& x : xs) first += x;
  bool identical = true;
  for (int round = 0; round < 20; ++round) {
    rng.shuffle(xs);
    Decimal s;
    for (const auto& x : xs) s += x;
    identical = identical && s.units() == first.units() && s.scale() == first.scale();
  }
  c.expect(identical, "shuffled sums differ; ");
  const Decimal tenth = parse_amount("0,10").value().value;
  const std::string s = format_amount(tenth + tenth + tenth, Convention::comma_decimal, 2);
  c.expect(s == "0,30", "0,10 x 3 formats to " + s);
  if (c.ok) c.why << "20 shuffles of 10000 amounts identical, 0,10+0,10+0,10 = 0,30";
}

void throughput(Check& c) {
  const auto gen = corpus(25, 77);
  const auto samples = samples_of(gen);
  auto gw = ScriptedGateway::from_json(perfect_script(gen));
  const auto results = run_batch(samples, *gw, TableSource::oracle_html, {}, 1);
  const EvalReport rep = aggregate(results, samples);
  const Throughput& tp = rep.throughput;
  const double product = tp.qps * tp.runtime_seconds;
  double fractions = 0;
  for (double f : tp.stage_fractions) fractions += f;
  c.expect(rep.n_questions == 100, std::to_string(rep.n_questions) + " questions; ");
  c.expect(std::abs(product - 100.0) <= 1e-6, "qps x runtime = " + std::to_string(product) + "; ");
  c.expect(std::abs(fractions - 1.0) <= 0.01, "fractions sum " + std::to_string(fractions));
  if (c.ok) c.why << "qps x runtime = " << product << ", stage fractions sum " << fractions;
}

void routing_metrics(Check& c) {
  const auto gen = corpus(25, 91);
  const auto samples = samples_of(gen);
  json script = perfect_script(gen);
  // Misroute every tenth question to a fixed wrong label.
  std::map<std::pair<QuestionCategory, QuestionCategory>, size_t> injected;
  size_t global = 0, n_injected = 0;
  size_t sample_idx = 0;
  for (auto& e : script) {
    if (e.at("stage") != "route") continue;
    json reply = json::parse(e.at("reply").get<std::string>());
    const auto& qs = samples.at(sample_idx++).questions;
    for (size_t i = 0; i < qs.size(); ++i, ++global) {
      if (global % 10 != 3) continue;
      const QuestionCategory wrong =
          qs[i].gold_category == QuestionCategory::other ? QuestionCategory::count_equals : QuestionCategory::other;
      reply["categories"][i] = std::string(to_string(wrong));
      ++injected[{qs[i].gold_category, wrong}];
      ++n_injected;
    }
    e["reply"] = reply.dump();
  }
  auto gw = ScriptedGateway::from_json(script);
  const auto results = run_batch(samples, *gw, TableSource::oracle_html, {}, 1);
  const EvalReport rep = aggregate(results, samples);
  c.expect(n_injected * 10 == rep.n_questions, "injected " + std::to_string(n_injected) + " of " + std::to_string(rep.n_questions) + "; ");
  c.expect(rep.route_acc == 90.0, "RouteAcc " + std::to_string(rep.route_acc) + "; ");
  size_t off = 0;
  bool cells_match = true;
  for (QuestionCategory g : kAllCategories)
    for (QuestionCategory p : kAllCategories) {
      if (g == p) continue;
      const size_t n = rep.confusion_counts[category_index(g)][category_index(p)];
      off += n;
      const auto it = injected.find({g, p});
      cells_match = cells_match && n == (it == injected.end() ? 0 : it->second);
    }
  c.expect(off == n_injected && cells_match, "off-diagonal mass " + std::to_string(off));
  if (c.ok) c.why << "RouteAcc 90.0, off-diagonal mass " << off << " = injected errors";
}

void oracle_html(Check& c) {
  const auto gen = corpus(300, 2718);
  const auto samples = samples_of(gen);
  auto gw = ScriptedGateway::from_json(perfect_script(gen));
  const auto results = run_batch(samples, *gw, TableSource::oracle_html, {}, 4);
  AggregateOptions opts;
  for (QuestionCategory q : kAllCategories)
    if (is_starred(q)) opts.categories.push_back(q);
  const EvalReport rep = aggregate(results, samples, opts);
  c.expect(rep.n_questions > 0, "no starred questions; ");
  for (QuestionCategory q : opts.categories)
    c.expect(rep[q].n > 0 && rep[q].correct == rep[q].n, std::string(short_label(q)) + " " + std::to_string(rep[q].em()) + "; ");
  if (c.ok) c.why << rep.n_questions << " starred questions, 100.0 exact match";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"subtotal-golden-run", subtotal_golden},        {"dsl-oracle-suite", dsl_oracle},
      {"fallback-safety", fallback_safety},    {"tree-edit-oracle", tree_edit},
      {"adjacency-grits-properties", adjacency_grits}, {"exact-decimal", exact_decimal},
      {"throughput-accounting", throughput},   {"routing-metrics", routing_metrics},
      {"oracle-html-mode", oracle_html},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      run(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.why << "exception: " << e.what();
    }
    std::cout << (c.ok ? "PASS " : "FAIL ") << name << ": " << c.why.str() << std::endl;
    failed += !c.ok;
  }
  std::cout << (criteria.size() - static_cast<size_t>(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}

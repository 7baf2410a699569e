#include "tablerouter/scoring.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/text.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <map>
#include <sstream>

namespace tablerouter {

using nlohmann::json;

namespace {

std::string strip_edge_marks(std::string s) {
  static const std::vector<std::string> marks = {"€", "eur", "$"};
  auto alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  bool changed = true;
  while (changed) {
    changed = false;
    s = text::trim(s);
    for (const auto& m : marks) {
      if (s.size() <= m.size()) continue;
      const bool word = m == "eur";
      if (s.starts_with(m) && !(word && alpha(s[m.size()]))) {
        s.erase(0, m.size());
        changed = true;
      } else if (s.ends_with(m) && !(word && alpha(s[s.size() - m.size() - 1]))) {
        s.erase(s.size() - m.size());
        changed = true;
      }
    }
  }
  return s;
}

NormalizedAnswer segment(std::string_view seg) {
  NormalizedAnswer a;
  if (auto amt = parse_amount(seg)) {
    a.kind = NormalizedAnswer::Kind::number;
    a.number = amt->value.reduced();
    return a;
  }
  a.kind = NormalizedAnswer::Kind::text;
  a.text = text::fold(seg);
  return a;
}

bool is_na(std::string_view s) { return s == "n/a" || s == "na" || s == "non applicable"; }

}  // namespace

std::string NormalizedAnswer::canonical() const {
  switch (kind) {
    case Kind::number: return number.reduced().to_string();
    case Kind::na: return "n/a";
    case Kind::text: return text;
    case Kind::list: {
      std::vector<std::string> parts;
      for (const auto& i : items) parts.push_back(i.canonical());
      return text::join(parts, "; ");
    }
  }
  return text;
}

bool operator==(const NormalizedAnswer& a, const NormalizedAnswer& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NormalizedAnswer::Kind::number: return a.number == b.number;
    case NormalizedAnswer::Kind::na: return true;
    case NormalizedAnswer::Kind::text: return a.text == b.text;
    case NormalizedAnswer::Kind::list: return a.items == b.items;
  }
  return false;
}

NormalizedAnswer normalize_answer(std::string_view raw) {
  std::string s = text::collapse_whitespace(text::compat_casefold(text::trim(raw)));
  s = strip_edge_marks(s);
  if (is_na(s)) return {NormalizedAnswer::Kind::na, {}, {}, {}};
  if (parse_amount(s)) return segment(s);
  for (char sep : {';', '/', ','}) {
    if (s.find(sep) == std::string::npos) continue;
    std::vector<NormalizedAnswer> items;
    for (const auto& part : text::split(s, sep)) {
      const std::string p = strip_edge_marks(text::trim(part));
      if (p.empty()) continue;
      items.push_back(is_na(p) ? NormalizedAnswer{NormalizedAnswer::Kind::na, {}, {}, {}} : segment(p));
    }
    if (items.size() == 1) return items.front();
    if (items.empty()) break;
    std::sort(items.begin(), items.end(),
              [](const NormalizedAnswer& a, const NormalizedAnswer& b) { return a.canonical() < b.canonical(); });
    NormalizedAnswer list;
    list.kind = NormalizedAnswer::Kind::list;
    list.items = std::move(items);
    return list;
  }
  return segment(s);
}

bool exact_match(std::string_view pred, std::string_view gold) { return normalize_answer(pred) == normalize_answer(gold); }

double EvalReport::confusion(QuestionCategory gold, QuestionCategory pred) const {
  const auto& row = confusion_counts[category_index(gold)];
  size_t total = 0;
  for (size_t v : row) total += v;
  return total ? static_cast<double>(row[category_index(pred)]) / static_cast<double>(total) : 0.0;
}

double weighted_overall(const EvalReport& r, const std::vector<QuestionCategory>& categories) {
  size_t n = 0, correct = 0;
  for (QuestionCategory c : categories) {
    n += r[c].n;
    correct += r[c].correct;
  }
  return n ? 100.0 * static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

EvalReport aggregate(const std::vector<PipelineResult>& results, const std::vector<Sample>& samples,
                     const AggregateOptions& opts) {
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : samples) by_id[s.id] = &s;

  EvalReport rep;
  rep.included = opts.categories;
  if (rep.included.empty()) rep.included.assign(kAllCategories.begin(), kAllCategories.end());
  auto included = [&](QuestionCategory c) {
    return std::find(rep.included.begin(), rep.included.end(), c) != rep.included.end();
  };

  size_t routed_ok = 0, routed_n = 0;
  for (const auto& r : results) {
    auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingGold, "no gold sample for " + r.sample_id);
    const Sample& s = *it->second;
    for (const auto& q : r.questions) {
      auto gq = std::find_if(s.questions.begin(), s.questions.end(), [&](const SampleQuestion& g) { return g.qid == q.qid; });
      if (gq == s.questions.end())
        throw Error(ErrorCode::MissingGold, "no gold answer for " + r.sample_id + " q" + std::to_string(q.qid));
      if (!included(gq->gold_category)) continue;
      CategoryScore& cs = rep.per_category[category_index(gq->gold_category)];
      ++cs.n;
      if (exact_match(opts.score_baseline ? q.baseline : q.final, gq->gold_answer)) ++cs.correct;
      ++rep.confusion_counts[category_index(gq->gold_category)][category_index(q.predicted_category)];
      ++routed_n;
      if (q.predicted_category == gq->gold_category) ++routed_ok;
    }
    rep.throughput.runtime_seconds += r.timings.total;
    for (PipelineStage st : kPipelineStages) rep.throughput.stage_seconds[static_cast<size_t>(st)] += r.timings[st];
  }

  rep.n_questions = routed_n;
  rep.overall = weighted_overall(rep, rep.included);
  rep.route_acc = routed_n ? 100.0 * static_cast<double>(routed_ok) / static_cast<double>(routed_n) : 0.0;

  Throughput& tp = rep.throughput;
  tp.direct_seconds = opts.direct_seconds.value_or(tp.stage_seconds[static_cast<size_t>(PipelineStage::direct_qa)]);
  tp.overhead_e2e = tp.direct_seconds > 0 ? tp.runtime_seconds / tp.direct_seconds : 0.0;
  tp.qps = tp.runtime_seconds > 0 ? static_cast<double>(rep.n_questions) / tp.runtime_seconds : 0.0;
  double extra = 0;
  for (PipelineStage st : kPipelineStages)
    if (st != PipelineStage::direct_qa) extra += tp.stage_seconds[static_cast<size_t>(st)];
  for (PipelineStage st : kPipelineStages) {
    const size_t i = static_cast<size_t>(st);
    tp.stage_fractions[i] = (st == PipelineStage::direct_qa || extra <= 0) ? 0.0 : tp.stage_seconds[i] / extra;
  }

  if (opts.baseline) {
    std::array<std::optional<double>, kCategoryCount> d{};
    for (QuestionCategory c : rep.included)
      if (rep[c].n && (*opts.baseline)[c].n) d[category_index(c)] = rep[c].em() - (*opts.baseline)[c].em();
    rep.deltas = d;
    rep.overall_delta = rep.overall - weighted_overall(*opts.baseline, rep.included);
  }
  return rep;
}

json to_json(const EvalReport& r) {
  json cats = json::object();
  for (QuestionCategory c : r.included) {
    json e{{"n", r[c].n}, {"exact_match", r[c].em()}};
    if (r.deltas && (*r.deltas)[category_index(c)]) e["delta_pp"] = *(*r.deltas)[category_index(c)];
    cats[std::string(to_string(c))] = e;
  }
  json confusion = json::array();
  for (QuestionCategory g : kAllCategories) {
    json row = json::array();
    for (QuestionCategory p : kAllCategories) row.push_back(r.confusion(g, p));
    confusion.push_back(row);
  }
  json labels = json::array();
  for (QuestionCategory c : kAllCategories) labels.push_back(to_string(c));
  json stages = json::object(), fractions = json::object();
  for (PipelineStage s : kPipelineStages) {
    stages[std::string(to_string(s))] = r.throughput.stage_seconds[static_cast<size_t>(s)];
    if (s != PipelineStage::direct_qa)
      fractions[std::string(to_string(s))] = r.throughput.stage_fractions[static_cast<size_t>(s)];
  }
  json j{{"per_category", cats},
         {"overall", r.overall},
         {"n_questions", r.n_questions},
         {"route_acc", r.route_acc},
         {"confusion", {{"labels", labels}, {"matrix", confusion}}},
         {"throughput",
          {{"runtime_seconds", r.throughput.runtime_seconds},
           {"direct_seconds", r.throughput.direct_seconds},
           {"overhead_e2e", r.throughput.overhead_e2e},
           {"qps", r.throughput.qps},
           {"stage_seconds", stages},
           {"stage_fractions", fractions}}}};
  if (r.overall_delta) j["overall_delta_pp"] = *r.overall_delta;
  return j;
}

std::string format_report_table(const EvalReport& r, std::string_view title) {
  std::vector<QuestionCategory> cols;
  for (QuestionCategory c : r.included)
    if (r[c].n) cols.push_back(c);
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << title << "\n";
  out << std::left << std::setw(8) << "" << std::right;
  for (QuestionCategory c : cols) out << std::setw(10) << short_label(c);
  out << std::setw(10) << "Overall" << "\n";
  out << std::left << std::setw(8) << "n" << std::right;
  for (QuestionCategory c : cols) out << std::setw(10) << r[c].n;
  out << std::setw(10) << r.n_questions << "\n";
  out << std::left << std::setw(8) << "EM" << std::right;
  for (QuestionCategory c : cols) out << std::setw(10) << r[c].em();
  out << std::setw(10) << r.overall << "\n";
  if (r.deltas) {
    auto signed_pp = [](double v) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(1) << std::showpos << v;
      return s.str();
    };
    out << std::left << std::setw(8) << "Δ" << std::right;
    for (QuestionCategory c : cols) {
      const auto& d = (*r.deltas)[category_index(c)];
      out << std::setw(10) << (d ? signed_pp(*d) : std::string("-"));
    }
    out << std::setw(10) << (r.overall_delta ? signed_pp(*r.overall_delta) : std::string("-")) << "\n";
  }
  out << "\nRouteAcc " << r.route_acc << "  Overhead_E2E " << std::setprecision(2) << r.throughput.overhead_e2e
      << "x  QPS " << std::setprecision(3) << r.throughput.qps << "\n";
  out << "stage fractions:";
  for (PipelineStage s : kPipelineStages) {
    if (s == PipelineStage::direct_qa) continue;
    out << " " << to_string(s) << "=" << std::setprecision(3) << r.throughput.stage_fractions[static_cast<size_t>(s)];
  }
  out << "\n";
  return out.str();
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "gold\\predicted";
  for (QuestionCategory c : kAllCategories) out << "," << to_string(c);
  out << "\n";
  for (QuestionCategory g : kAllCategories) {
    out << to_string(g);
    for (QuestionCategory p : kAllCategories) out << "," << r.confusion(g, p);
    out << "\n";
  }
  return out.str();
}

}  // namespace tablerouter

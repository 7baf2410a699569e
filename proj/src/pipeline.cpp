#include "tablerouter/pipeline.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/json_extract.hpp"
#include "tablerouter/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

namespace tablerouter {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(TableSource s) {
  return s == TableSource::oracle_html ? "oracle-html" : "image-model";
}

std::optional<TableSource> table_source_from_string(std::string_view s) {
  if (s == "oracle-html") return TableSource::oracle_html;
  if (s == "image-model") return TableSource::image_model;
  return std::nullopt;
}

std::string_view to_string(PipelineStage s) {
  switch (s) {
    case PipelineStage::direct_qa: return "direct_qa";
    case PipelineStage::tsr_serialize: return "tsr_serialize";
    case PipelineStage::route: return "route";
    case PipelineStage::plan: return "plan";
    case PipelineStage::execute: return "execute";
    case PipelineStage::repair: return "repair";
  }
  return "direct_qa";
}

double StageTimings::stage_sum() const {
  double s = 0;
  for (double v : seconds) s += v;
  return s;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig cfg;
  cfg.max_repair_rounds = j.value("max_repair_rounds", cfg.max_repair_rounds);
  cfg.routing = j.value("routing", cfg.routing);
  cfg.direct_only = j.value("direct_only", cfg.direct_only);
  cfg.gold_category_hints = j.value("gold_category_hints", cfg.gold_category_hints);
  cfg.merge_system = j.value("merge_system", cfg.merge_system);
  if (j.contains("format")) {
    const json& f = j.at("format");
    if (f.contains("convention")) cfg.format.convention = convention_from_string(f.at("convention").get<std::string>());
    cfg.format.min_scale = f.value("min_scale", cfg.format.min_scale);
  }
  if (j.contains("role_keywords")) cfg.keywords = RoleKeywordConfig::from_json_text(j.at("role_keywords").dump());
  return cfg;
}

OverrideDecision decide_override(const std::string& baseline, const std::optional<dsl::ExecResult>& outcome,
                                 const TableJson& table) {
  if (outcome && outcome->ok() && dsl::is_grounded(*outcome, table)) return {outcome->answer(), true};
  return {baseline, false};
}

namespace {

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

class StageTimer {
 public:
  StageTimer(StageTimings& t, PipelineStage s) : t_(t), s_(s), start_(Clock::now()) {}
  ~StageTimer() { t_[s_] += std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  StageTimings& t_;
  PipelineStage s_;
  Clock::time_point start_;
};

std::string image_mime(const std::string& path) {
  auto ext = text::to_lower_ascii(std::filesystem::path(path).extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  return "image/png";
}

std::string error_slot(const dsl::ExecError& err, const std::optional<dsl::ExecTrace>& trace) {
  std::string s = err.describe();
  if (trace && !trace->steps.empty()) s += "\nTRACE: " + dsl::to_json(*trace).dump();
  return s;
}

}  // namespace

std::vector<std::string> parse_answers(std::string_view reply, size_t n) {
  std::vector<std::string> out(n);
  const auto j = extract_json(reply);
  if (!j || !j->is_object() || !j->contains("answers")) return out;
  const json& a = j->at("answers");
  if (!a.is_array() || a.size() != n) return out;
  for (size_t i = 0; i < n; ++i) out[i] = text::trim(scalar_text(a[i]));
  return out;
}

std::vector<QuestionCategory> parse_categories(std::string_view reply, size_t n) {
  std::vector<QuestionCategory> out(n, QuestionCategory::other);
  const auto j = extract_json(reply);
  if (!j || !j->is_object() || !j->contains("categories")) return out;
  const json& a = j->at("categories");
  if (!a.is_array() || a.size() != n) return out;
  for (size_t i = 0; i < n; ++i) {
    const std::string label = text::to_lower_ascii(text::trim(scalar_text(a[i])));
    out[i] = category_from_string(label).value_or(QuestionCategory::other);
  }
  return out;
}

TableJson build_table_json(const std::string& html, const std::optional<std::vector<RowRole>>& roles,
                           const RoleKeywordConfig& keywords) {
  try {
    const TableGrid grid = parse_table(sanitize_html(html));
    if (roles && roles->size() == grid.n_rows()) return to_table_json(grid, *roles);
    return to_table_json(grid, keywords);
  } catch (const Error&) {
    return {};
  }
}

std::optional<dsl::Program> repair(const dsl::ExecError& err, const std::optional<dsl::ExecTrace>& trace,
                                   const TableJson& t, size_t qid, QuestionCategory category,
                                   const std::string& question, ModelGateway& model, int rounds_left,
                                   bool merge_system) {
  if (rounds_left <= 0) return std::nullopt;
  PromptPayload payload;
  payload.table_json = to_json(t).dump();
  payload.qid = qid;
  payload.category = std::string(to_string(category));
  payload.question = question;
  payload.error = error_slot(err, trace);
  const std::string reply = model.call(build_request(Stage::repair, payload, merge_system));
  auto j = extract_json(reply);
  if (!j) return std::nullopt;
  if (j->is_object() && j->contains("programs") && j->at("programs").is_array() && !j->at("programs").empty())
    j = j->at("programs").at(0);
  if (!j->is_object() || !j->contains("ops")) return std::nullopt;
  dsl::Program p = dsl::parse_program(*j, qid);
  p.qid = qid;
  if (dsl::validate(p, t)) return std::nullopt;
  return p;
}

PipelineResult run_pipeline(const Sample& sample, ModelGateway& model, TableSource source, const PipelineConfig& cfg) {
  const auto start = Clock::now();
  PipelineResult result;
  result.sample_id = sample.id;
  const size_t n = sample.questions.size();
  std::vector<std::string> texts;
  for (const auto& q : sample.questions) texts.push_back(q.text);

  std::optional<std::string> image;
  if (source == TableSource::image_model && sample.image_path) image = read_file(*sample.image_path);

  // Direct branch.
  std::vector<std::string> baseline;
  {
    StageTimer timer(result.timings, PipelineStage::direct_qa);
    PromptPayload payload;
    payload.questions = texts;
    if (source == TableSource::oracle_html) payload.table_html = sample.gt_html;
    ChatRequest req = build_request(Stage::direct_qa, payload, cfg.merge_system);
    if (image) {
      req.image = image;
      req.image_mime = image_mime(*sample.image_path);
    }
    baseline = parse_answers(model.call(req), n);
  }

  std::vector<QuestionCategory> predicted(n, QuestionCategory::other);
  const bool route = cfg.routing && !cfg.direct_only;
  if (route) {
    StageTimer timer(result.timings, PipelineStage::route);
    PromptPayload payload;
    payload.questions = texts;
    predicted = parse_categories(model.call(build_request(Stage::route, payload, cfg.merge_system)), n);
  }

  for (size_t i = 0; i < n; ++i) {
    QuestionResult qr;
    qr.qid = sample.questions[i].qid;
    qr.question = texts[i];
    qr.baseline = baseline[i];
    qr.final = baseline[i];
    qr.predicted_category = predicted[i];
    qr.routed = route && is_starred(predicted[i]);
    result.questions.push_back(std::move(qr));
  }

  std::vector<size_t> routed;
  for (size_t i = 0; i < n; ++i)
    if (result.questions[i].routed) routed.push_back(i);

  if (!routed.empty()) {
    TableJson table;
    {
      StageTimer timer(result.timings, PipelineStage::tsr_serialize);
      if (source == TableSource::oracle_html) {
        table = build_table_json(sample.gt_html, sample.row_roles, cfg.keywords);
      } else {
        ChatRequest req = build_request(Stage::tsr, {}, cfg.merge_system);
        if (image) {
          req.image = image;
          req.image_mime = image_mime(*sample.image_path);
        }
        table = build_table_json(model.call(req), std::nullopt, cfg.keywords);
      }
    }
    result.table = table;

    std::vector<std::optional<dsl::Program>> programs(routed.size());
    std::optional<dsl::ExecError> plan_error;
    {
      StageTimer timer(result.timings, PipelineStage::plan);
      PromptPayload payload;
      payload.table_json = to_json(table).dump();
      for (size_t i : routed) {
        payload.questions.push_back(texts[i]);
        const QuestionCategory hint = cfg.gold_category_hints ? sample.questions[i].gold_category : predicted[i];
        payload.category_hints.emplace_back(to_string(hint));
      }
      const std::string reply = model.call(build_request(Stage::plan, payload, cfg.merge_system));
      try {
        for (auto& p : dsl::parse_programs(reply)) {
          if (p.qid >= 1 && p.qid <= routed.size() && !programs[p.qid - 1]) programs[p.qid - 1] = std::move(p);
        }
      } catch (const Error& e) {
        plan_error = dsl::ExecError{dsl::ExecErrorKind::BadShape, e.what()};
      }
    }

    for (size_t k = 0; k < routed.size(); ++k) {
      QuestionResult& qr = result.questions[routed[k]];
      const QuestionCategory category = qr.predicted_category;

      auto attempt = [&](const dsl::Program& p) {
        qr.program = p;
        qr.exec.reset();
        if (p.parse_error) {
          qr.error = p.parse_error;
          return;
        }
        if (auto err = dsl::validate(p, table)) {
          qr.error = err;
          return;
        }
        const dsl::Program normalized = dsl::normalize(p, category);
        qr.program = normalized;
        qr.exec = dsl::execute(normalized, table, cfg.format);
        if (qr.exec->ok()) qr.error.reset();
        else qr.error = qr.exec->error();
      };

      {
        StageTimer timer(result.timings, PipelineStage::execute);
        if (programs[k]) {
          attempt(*programs[k]);
        } else {
          qr.error = plan_error.value_or(
              dsl::ExecError{dsl::ExecErrorKind::BadShape, "planner returned no program for qid " + std::to_string(k + 1)});
        }
      }

      while (qr.error && qr.repair_rounds < cfg.max_repair_rounds) {
        StageTimer timer(result.timings, PipelineStage::repair);
        ++qr.repair_rounds;
        std::optional<dsl::ExecTrace> trace;
        if (qr.exec) trace = qr.exec->trace;
        auto fixed = repair(*qr.error, trace, table, k + 1, category, qr.question, model,
                            cfg.max_repair_rounds - qr.repair_rounds + 1, cfg.merge_system);
        if (!fixed) break;
        attempt(*fixed);
      }

      const auto decision = decide_override(qr.baseline, qr.error ? std::nullopt : qr.exec, table);
      qr.final = decision.final;
      qr.overridden = decision.overridden;
    }
  }

  result.timings.total = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

std::vector<PipelineResult> run_batch(const std::vector<Sample>& samples, ModelGateway& model, TableSource source,
                                      const PipelineConfig& cfg, unsigned workers) {
  std::vector<PipelineResult> results(samples.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (size_t i = next++; i < samples.size(); i = next++) {
      try {
        results[i] = run_pipeline(samples[i], model, source, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = samples.size();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<size_t>(samples.size(), 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

json to_json(const StageTimings& t) {
  json stages = json::object();
  for (PipelineStage s : kPipelineStages) stages[std::string(to_string(s))] = t[s];
  return {{"stages", stages}, {"total", t.total}};
}

std::vector<json> to_records(const PipelineResult& r) {
  std::vector<json> out;
  for (const auto& q : r.questions) {
    json rec{{"sample_id", r.sample_id},
             {"qid", q.qid},
             {"question", q.question},
             {"baseline", q.baseline},
             {"predicted_category", to_string(q.predicted_category)},
             {"routed", q.routed},
             {"program", q.program ? dsl::to_json(*q.program) : json(nullptr)},
             {"repair_rounds", q.repair_rounds},
             {"final", q.final},
             {"overridden", q.overridden}};
    if (q.error) {
      rec["exec_outcome"] = {{"error", {{"kind", dsl::to_string(q.error->kind)}, {"message", q.error->message}}}};
    } else if (q.exec) {
      rec["exec_outcome"] = {{"value", q.exec->answer()}};
    } else {
      rec["exec_outcome"] = nullptr;
    }
    if (q.exec) rec["trace"] = dsl::to_json(q.exec->trace);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace tablerouter

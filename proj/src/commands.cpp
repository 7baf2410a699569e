#include "tablerouter/commands.hpp"

#include "tablerouter/annotator.hpp"
#include "tablerouter/error.hpp"
#include "tablerouter/gateway.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/pipeline.hpp"
#include "tablerouter/scoring.hpp"
#include "tablerouter/synth.hpp"
#include "tablerouter/text.hpp"
#include "tablerouter/tsr_metrics.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tablerouter::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

void write_out(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write " + p.string());
  out << content;
}

json read_json_file(const fs::path& p) {
  auto text = read_file(p);
  if (!text) throw Error(ErrorCode::FileUnreadable, "cannot read " + p.string());
  json j = json::parse(*text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, p.string() + " is not valid JSON");
  return j;
}

struct Common {
  std::string manifest;
  std::string gateway;
  std::string table_source = "oracle-html";
  std::string out = "out";
  std::string categories;
  std::string config;
  int max_repair_rounds = -1;
  unsigned workers = 1;
};

std::vector<Sample> load_samples(const std::string& path, std::ostream& err) {
  ManifestLoad load = load_manifest(path);
  for (const auto& w : load.warnings) err << "warning: " << w << "\n";
  for (const auto& e : load.errors) err << "skipped: " << e << "\n";
  return std::move(load.samples);
}

int run_vqa(const Common& c, const std::string& command, std::ostream& out, std::ostream& err) {
  if (c.gateway.empty()) throw Error(ErrorCode::InvalidArgument, "--gateway is required");
  auto source = table_source_from_string(c.table_source);
  if (!source) throw Error(ErrorCode::InvalidArgument, "unknown table source \"" + c.table_source + "\"");
  if (command == "vqa-oracle") source = TableSource::oracle_html;

  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : PipelineConfig::from_json(read_json_file(c.config));
  if (c.max_repair_rounds >= 0) cfg.max_repair_rounds = c.max_repair_rounds;
  if (command == "vqa-direct") cfg.direct_only = true;

  const std::vector<Sample> samples = load_samples(c.manifest, err);
  auto gateway = make_gateway(c.gateway);
  const auto results = run_batch(samples, *gateway, *source, cfg, std::max(1u, c.workers));

  AggregateOptions base_opts;
  base_opts.score_baseline = true;
  base_opts.categories = parse_category_filter(c.categories);
  const EvalReport base = aggregate(results, samples, base_opts);
  AggregateOptions opts;
  opts.categories = base_opts.categories;
  opts.baseline = &base;
  const EvalReport rep = aggregate(results, samples, opts);

  size_t overridden = 0, routed = 0;
  std::ostringstream records;
  json per_sample = json::array();
  for (const auto& r : results) {
    for (const auto& q : r.questions) {
      overridden += q.overridden;
      routed += q.routed;
    }
    for (const auto& rec : to_records(r)) records << rec.dump() << "\n";
    per_sample.push_back({{"sample_id", r.sample_id}, {"timings", to_json(r.timings)}});
  }

  json report{{"command", command},
               {"table_source", to_string(*source)},
               {"n_samples", samples.size()},
               {"routed", routed},
               {"overridden", overridden},
               {"baseline", to_json(base)},
               {"final", to_json(rep)}};
  const fs::path dir = c.out;
  write_out(dir / "report.json", report.dump(2) + "\n");
  std::string table = format_report_table(base, "Direct baseline (exact match, %)");
  if (command != "vqa-direct") table += "\n" + format_report_table(rep, "Router (exact match, %)");
  write_out(dir / "report.txt", table);
  write_out(dir / "confusion.csv", confusion_csv(rep));
  write_out(dir / "timings.json", json{{"totals", rep.throughput.stage_seconds}, {"samples", per_sample}}.dump(2) + "\n");
  write_out(dir / "results.jsonl", records.str());
  out << table;
  return 0;
}

int run_gen_synth(const std::string& config, std::optional<uint64_t> seed, std::optional<size_t> n, const std::string& out_dir,
                  std::ostream& out) {
  SynthConfig cfg = config.empty() ? SynthConfig{} : SynthConfig::from_json(read_json_file(config));
  if (seed) cfg.seed = *seed;
  if (n) cfg.n_samples = *n;
  const auto generated = generate_synthetic(cfg);
  std::vector<Sample> samples;
  for (const auto& g : generated) samples.push_back(g.sample);
  const fs::path dir = out_dir;
  write_manifest(dir / "manifest.jsonl", samples);
  write_out(dir / "script.json", perfect_script(generated).dump(1) + "\n");
  write_out(dir / "synth_config.json", cfg.to_json().dump(2) + "\n");
  const CorpusStats st = corpus_stats(samples);
  write_out(dir / "report.json", json{{"command", "gen-synth"}, {"stats", to_json(st)}}.dump(2) + "\n");
  std::ostringstream txt;
  txt << "wrote " << samples.size() << " samples, " << st.n_questions << " questions to " << (dir / "manifest.jsonl").string() << "\n";
  write_out(dir / "report.txt", txt.str());
  out << txt.str();
  return 0;
}

std::string stats_table(const CorpusStats& s) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(1);
  o << "samples              " << s.n_samples << "\n";
  o << "questions            " << s.n_questions << "\n";
  o << "median rows          " << s.median_rows << "\n";
  o << "median cols          " << s.median_cols << "\n";
  o << "spanning cells (%)   " << s.spanning_prevalence << "\n";
  for (QuestionCategory c : kAllCategories)
    if (s.per_category[category_index(c)])
      o << std::left << std::setw(21) << short_label(c) << std::right << s.per_category[category_index(c)] << "\n";
  return o.str();
}

int run_stats(const Common& c, std::ostream& out, std::ostream& err) {
  const auto samples = load_samples(c.manifest, err);
  const CorpusStats st = corpus_stats(samples);
  const fs::path dir = c.out;
  write_out(dir / "report.json", json{{"command", "stats"}, {"stats", to_json(st)}}.dump(2) + "\n");
  write_out(dir / "report.txt", stats_table(st));
  out << stats_table(st);
  return 0;
}

int run_tsr_eval(const Common& c, const std::string& pred_dir, std::ostream& out, std::ostream& err) {
  const auto samples = load_samples(c.manifest, err);
  json rows = json::array();
  std::ostringstream csv;
  csv << "id,teds,s_teds,adjacency_f1,grits_top\n";
  double sums[4] = {0, 0, 0, 0};
  for (const Sample& s : samples) {
    std::string pred;
    if (auto p = read_file(fs::path(pred_dir) / (s.id + ".html"))) pred = std::move(*p);
    else err << "warning: no prediction for " << s.id << ", scored as empty\n";
    const TableGrid gt = parse_table(sanitize_html(s.gt_html));
    TableGrid pg;
    try {
      pg = parse_table(sanitize_html(pred));
    } catch (const Error&) {
    }
    const double v[4] = {teds(pred, s.gt_html, false).value, teds(pred, s.gt_html, true).value,
                         adjacency_f1(pg, gt).value, grits_top(pg, gt).value};
    for (int i = 0; i < 4; ++i) sums[i] += v[i];
    rows.push_back({{"id", s.id}, {"teds", v[0]}, {"s_teds", v[1]}, {"adjacency_f1", v[2]}, {"grits_top", v[3]}});
    csv << s.id << std::setprecision(6) << "," << v[0] << "," << v[1] << "," << v[2] << "," << v[3] << "\n";
  }
  const double n = static_cast<double>(samples.size());
  json means{{"teds", sums[0] / n}, {"s_teds", sums[1] / n}, {"adjacency_f1", sums[2] / n}, {"grits_top", sums[3] / n}};
  std::ostringstream txt;
  txt << std::fixed << std::setprecision(2);
  txt << "TSR (n=" << samples.size() << ")\n";
  txt << "TEDS      " << 100 * sums[0] / n << "\n";
  txt << "S-TEDS    " << 100 * sums[1] / n << "\n";
  txt << "Adj-F1    " << 100 * sums[2] / n << "\n";
  txt << "GriTS-top " << 100 * sums[3] / n << "\n";
  const fs::path dir = c.out;
  write_out(dir / "report.json", json{{"command", "tsr-eval"}, {"mean", means}, {"samples", rows}}.dump(2) + "\n");
  write_out(dir / "per_sample.csv", csv.str());
  write_out(dir / "report.txt", txt.str());
  out << txt.str();
  return 0;
}

int fail(const std::string& code, const std::string& message, const std::string& out_dir, std::ostream& err) {
  const json record{{"error", {{"code", code}, {"message", message}}}};
  err << record.dump() << "\n";
  if (!out_dir.empty()) {
    try {
      write_out(fs::path(out_dir) / "error.json", record.dump(2) + "\n");
    } catch (...) {
    }
  }
  return 2;
}

}  // namespace

CorpusStats corpus_stats(const std::vector<Sample>& samples) {
  CorpusStats st;
  std::vector<double> rows, cols;
  size_t spanning = 0;
  for (const Sample& s : samples) {
    const TableGrid g = parse_table(sanitize_html(s.gt_html));
    rows.push_back(static_cast<double>(g.n_rows()));
    cols.push_back(static_cast<double>(g.n_cols()));
    if (g.spanning_cell_count() > 0) ++spanning;
    for (const auto& q : s.questions) ++st.per_category[category_index(q.gold_category)];
    st.n_questions += s.questions.size();
  }
  st.n_samples = samples.size();
  st.median_rows = median(rows);
  st.median_cols = median(cols);
  st.spanning_prevalence = samples.empty() ? 0.0 : 100.0 * static_cast<double>(spanning) / static_cast<double>(samples.size());
  return st;
}

json to_json(const CorpusStats& s) {
  json cats = json::object();
  for (QuestionCategory c : kAllCategories) cats[std::string(to_string(c))] = s.per_category[category_index(c)];
  return {{"n_samples", s.n_samples},
          {"n_questions", s.n_questions},
          {"median_rows", s.median_rows},
          {"median_cols", s.median_cols},
          {"spanning_prevalence", s.spanning_prevalence},
          {"per_category", cats}};
}

std::vector<QuestionCategory> parse_category_filter(const std::string& spec) {
  std::vector<QuestionCategory> out;
  for (const auto& raw : text::split(spec, ',')) {
    const std::string label = text::trim(raw);
    if (label.empty()) continue;
    if (label == "starred") {
      for (QuestionCategory c : kAllCategories)
        if (is_starred(c)) out.push_back(c);
      continue;
    }
    auto c = category_from_string(label);
    if (!c) throw Error(ErrorCode::InvalidArgument, "unknown category \"" + label + "\"");
    out.push_back(*c);
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Table question answering with routed program execution"};
  app.require_subcommand(1);
  Common c;
  std::string pred_dir, synth_config, host = "127.0.0.1";
  std::optional<uint64_t> seed;
  std::optional<size_t> n_samples;
  int port = 8080;

  auto add_manifest = [&](CLI::App* s) { s->add_option("--manifest", c.manifest, "JSON-Lines manifest")->required(); };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", c.out, "output directory"); };
  auto add_vqa = [&](CLI::App* s) {
    add_manifest(s);
    add_out(s);
    s->add_option("--gateway", c.gateway, "http:URL or scripted:FILE")->required();
    s->add_option("--table-source", c.table_source, "image-model or oracle-html");
    s->add_option("--categories", c.categories, "comma list of categories to score (or \"starred\")");
    s->add_option("--max-repair-rounds", c.max_repair_rounds, "repair rounds per question");
    s->add_option("--workers", c.workers, "parallel samples");
    s->add_option("--config", c.config, "pipeline config JSON");
    s->add_option("--seed", seed, "unused by the pipeline, recorded for reproducibility");
  };

  CLI::App* tsr = app.add_subcommand("tsr-eval", "score predicted HTML against ground truth");
  add_manifest(tsr);
  add_out(tsr);
  tsr->add_option("--pred", pred_dir, "directory of <id>.html predictions")->required();
  CLI::App* direct = app.add_subcommand("vqa-direct", "direct answers only");
  add_vqa(direct);
  CLI::App* oracle = app.add_subcommand("vqa-oracle", "router with ground-truth HTML as the table");
  add_vqa(oracle);
  CLI::App* pipe = app.add_subcommand("pipeline", "full router pipeline");
  add_vqa(pipe);
  CLI::App* gen = app.add_subcommand("gen-synth", "write a synthetic manifest");
  add_out(gen);
  gen->add_option("--config", synth_config, "synthetic corpus config JSON");
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--n", n_samples, "number of samples");
  CLI::App* stats = app.add_subcommand("stats", "corpus statistics");
  add_manifest(stats);
  add_out(stats);
  CLI::App* serve_cmd = app.add_subcommand("serve", "annotation service");
  add_manifest(serve_cmd);
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "port");

  std::vector<std::string> argv_store;
  argv_store.push_back("tablerouter");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    fail("InvalidArgument", e.what(), "", err);
    return 1;
  }

  try {
    if (*tsr) return run_tsr_eval(c, pred_dir, out, err);
    if (*direct) return run_vqa(c, "vqa-direct", out, err);
    if (*oracle) return run_vqa(c, "vqa-oracle", out, err);
    if (*pipe) return run_vqa(c, "pipeline", out, err);
    if (*gen) return run_gen_synth(synth_config, seed, n_samples, c.out, out);
    if (*stats) return run_stats(c, out, err);
    if (*serve_cmd) {
      annot::AnnotatorService svc(c.manifest);
      for (const auto& w : svc.load_warnings()) err << "warning: " << w << "\n";
      err << "listening on http://" << host << ":" << port << "\n";
      annot::serve(svc, host, port);
      return 0;
    }
  } catch (const Error& e) {
    return fail(std::string(to_string(e.code())), e.what(), c.out, err);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), c.out, err);
  }
  return 1;
}

}  // namespace tablerouter::cli

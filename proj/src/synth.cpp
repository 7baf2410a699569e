#include "tablerouter/synth.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/grid.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/table_json.hpp"
#include "tablerouter/text.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace tablerouter {

using nlohmann::json;

long long Rng::uniform(long long lo, long long hi) {
  if (hi <= lo) return lo;
  const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
  const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % range;
  uint64_t x = next();
  while (x >= limit) x = next();
  return lo + static_cast<long long>(x % range);
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

namespace {

struct ActDef {
  std::string name;
  std::string type;
  bool tooth;
};

const std::vector<ActDef>& acts() {
  static const std::vector<ActDef> list = {
      {"Consultation", "Soins", false},
      {"Détartrage", "Soins", false},
      {"Obturation 2 faces", "Soins", true},
      {"Obturation 3 faces", "Soins", true},
      {"Dévitalisation molaire", "Soins", true},
      {"Scellement de sillons", "Soins", true},
      {"Extraction", "Chirurgie", true},
      {"Greffe osseuse", "Chirurgie", true},
      {"Radiographie panoramique", "Radiologie", false},
      {"Radio rétro-alvéolaire", "Radiologie", true},
      {"Couronne céramo-métallique", "Prothèse", true},
      {"Couronne zircone", "Prothèse", true},
      {"Inlay-core", "Prothèse", true},
      {"Bridge 3 éléments", "Prothèse", true},
      {"Implant", "Implantologie", true},
      {"Pilier implantaire", "Implantologie", true},
  };
  return list;
}

const std::vector<std::string> kAmountHeaders = {"Honoraires", "Base de remboursement", "Montant remboursé",
                                                 "Reste à charge"};

struct Line {
  RowRole role = RowRole::data;
  std::string act;
  std::string tooth;
  std::string type;
  std::vector<Decimal> amounts;
  std::vector<std::string> amount_text;
  size_t body_index = 0;  // 1-based
};

struct Table {
  std::vector<std::string> headers;  // flattened, as TABLE_JSON will show them
  size_t n_amounts = 0;
  bool merged_header = false;
  std::vector<Line> body;
  std::optional<size_t> total_pos;

  std::vector<const Line*> data() const {
    std::vector<const Line*> out;
    for (const auto& l : body)
      if (l.role == RowRole::data) out.push_back(&l);
    return out;
  }
};

std::string amount_text(const Decimal& v, Convention conv, bool grouped) {
  std::string s = format_amount(v, conv, 2);
  if (!grouped) return s;
  const bool neg = !s.empty() && s[0] == '-';
  const size_t mark = s.find(conv == Convention::comma_decimal ? ',' : '.');
  std::string intpart = s.substr(neg ? 1 : 0, mark - (neg ? 1 : 0));
  if (intpart.size() <= 3) return s;
  const std::string sep = conv == Convention::comma_decimal ? " " : ",";
  std::string grouped_int;
  const size_t lead = intpart.size() % 3;
  for (size_t i = 0; i < intpart.size(); ++i) {
    if (i && (i - lead) % 3 == 0 && i >= lead) grouped_int += sep;
    grouped_int += intpart[i];
  }
  return (neg ? "-" : "") + grouped_int + s.substr(mark);
}

Decimal random_amount(Rng& rng) { return Decimal(BigInt(rng.uniform(1000, 150000)), 2); }

std::string random_tooth(Rng& rng) {
  const long long quadrant = rng.uniform(1, 4);
  const long long tooth = rng.uniform(1, 8);
  return std::to_string(quadrant * 10 + tooth);
}

Table build_table(const SynthConfig& cfg, Rng& rng) {
  Table t;
  t.n_amounts = static_cast<size_t>(rng.uniform(static_cast<long long>(cfg.amount_cols_min),
                                                static_cast<long long>(cfg.amount_cols_max)));
  t.merged_header = rng.bernoulli(cfg.span_probability);
  t.headers = {"Acte", "Dent", "Type"};
  for (size_t i = 0; i < t.n_amounts; ++i)
    t.headers.push_back(t.merged_header ? "Montants | " + kAmountHeaders[i] : kAmountHeaders[i]);

  const size_t n_data = static_cast<size_t>(rng.uniform(static_cast<long long>(cfg.rows_min),
                                                        static_cast<long long>(cfg.rows_max)));
  std::vector<size_t> pool(acts().size());
  for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  rng.shuffle(pool);
  std::vector<Line> data;
  for (size_t i = 0; i < n_data; ++i) {
    const ActDef& a = acts()[n_data <= pool.size() ? pool[i] : static_cast<size_t>(rng.uniform(0, static_cast<long long>(acts().size()) - 1))];
    Line l;
    l.act = a.name;
    l.type = a.type;
    if (a.tooth && !rng.bernoulli(cfg.empty_tooth_probability)) l.tooth = random_tooth(rng);
    for (size_t c = 0; c < t.n_amounts; ++c) {
      l.amounts.push_back(random_amount(rng));
      l.amount_text.push_back(amount_text(l.amounts.back(), cfg.convention, rng.bernoulli(cfg.grouping_probability)));
    }
    data.push_back(std::move(l));
  }

  auto sum_line = [&](RowRole role, const std::string& label, size_t from, size_t to, const Decimal& delta) {
    Line l;
    l.role = role;
    l.act = label;
    for (size_t c = 0; c < t.n_amounts; ++c) {
      Decimal s(BigInt(0), 2);
      for (size_t i = from; i < to; ++i) s += data[i].amounts[c];
      if (c == 0) s += delta;
      l.amounts.push_back(s);
      l.amount_text.push_back(amount_text(s, cfg.convention, false));
    }
    return l;
  };

  const bool subtotal = n_data >= 2 && rng.bernoulli(cfg.subtotal_probability);
  const size_t split = subtotal ? static_cast<size_t>(rng.uniform(1, static_cast<long long>(n_data) - 1)) : n_data;
  for (size_t i = 0; i < split; ++i) t.body.push_back(data[i]);
  if (subtotal) {
    t.body.push_back(sum_line(RowRole::subtotal, rng.bernoulli(0.5) ? "Sous-total" : "SOUS-TOTAL", 0, split, Decimal()));
    for (size_t i = split; i < n_data; ++i) t.body.push_back(data[i]);
  }
  if (rng.bernoulli(cfg.total_probability)) {
    Decimal delta(BigInt(0), 2);
    if (rng.bernoulli(cfg.inconsistent_total_probability)) delta = Decimal(BigInt(rng.uniform(1, 50) * 100), 2);
    static const std::vector<std::string> labels = {"Total", "Total à payer", "TOTAL"};
    t.body.push_back(sum_line(RowRole::total, rng.pick(labels), 0, n_data, delta));
    t.total_pos = t.body.size() - 1;
  }
  for (size_t i = 0; i < t.body.size(); ++i) t.body[i].body_index = i + 1;
  return t;
}

std::string render_html(const Table& t, bool merge_types) {
  const size_t n_cols = 3 + t.n_amounts;
  const size_t header_rows = t.merged_header ? 2 : 1;
  std::vector<TableGrid::Anchor> anchors;
  if (t.merged_header) {
    anchors.push_back({0, 0, 2, 1, "Acte"});
    anchors.push_back({0, 1, 2, 1, "Dent"});
    anchors.push_back({0, 2, 2, 1, "Type"});
    anchors.push_back({0, 3, 1, t.n_amounts, "Montants"});
    for (size_t c = 0; c < t.n_amounts; ++c) anchors.push_back({1, 3 + c, 1, 1, kAmountHeaders[c]});
  } else {
    anchors.push_back({0, 0, 1, 1, "Acte"});
    anchors.push_back({0, 1, 1, 1, "Dent"});
    anchors.push_back({0, 2, 1, 1, "Type"});
    for (size_t c = 0; c < t.n_amounts; ++c) anchors.push_back({0, 3 + c, 1, 1, kAmountHeaders[c]});
  }
  for (size_t i = 0; i < t.body.size(); ++i) {
    const Line& l = t.body[i];
    const size_t r = header_rows + i;
    anchors.push_back({r, 0, 1, 1, l.act});
    anchors.push_back({r, 1, 1, 1, l.tooth});
    if (!merge_types || l.role != RowRole::data || (i > 0 && t.body[i - 1].role == RowRole::data &&
                                                     t.body[i - 1].type == l.type)) {
      if (!merge_types || l.role != RowRole::data) anchors.push_back({r, 2, 1, 1, l.type});
    } else {
      size_t span = 1;
      while (i + span < t.body.size() && t.body[i + span].role == RowRole::data && t.body[i + span].type == l.type) ++span;
      anchors.push_back({r, 2, span, 1, l.type});
    }
    for (size_t c = 0; c < t.n_amounts; ++c) anchors.push_back({r, 3 + c, 1, 1, l.amount_text[c]});
  }
  auto grid = TableGrid::from_anchors(header_rows + t.body.size(), n_cols, anchors, header_rows);
  if (!grid) throw Error(ErrorCode::InvalidArgument, "generator produced overlapping spans");
  return to_html(*grid);
}

json op_exclude() { return {{"op", "EXCLUDE_ROLES"}, {"roles", {"total", "subtotal"}}}; }

struct Question {
  QuestionCategory category;
  std::string text;
  std::string gold;
  std::string naive;
  json program;  // null when no reference program
};

std::string fmt(const Decimal& v, Convention conv) { return format_amount(v, conv, 2); }

std::vector<std::string> present_types(const Table& t) {
  std::vector<std::string> types;
  for (const Line* l : t.data())
    if (std::find(types.begin(), types.end(), l->type) == types.end()) types.push_back(l->type);
  return types;
}

bool feasible(QuestionCategory c, const Table& t) {
  if (c == QuestionCategory::total_row_value || c == QuestionCategory::consistency_diff_total) return t.total_pos.has_value();
  return true;
}

Question make_question(QuestionCategory c, const Table& t, const SynthConfig& cfg, Rng& rng) {
  const Convention conv = cfg.convention;
  const auto data = t.data();
  const size_t ac = static_cast<size_t>(rng.uniform(0, static_cast<long long>(t.n_amounts) - 1));
  const std::string& H = t.headers[3 + ac];
  const std::string& amount_name = kAmountHeaders[ac];
  auto program = [](json ops) { return json{{"qid", 1}, {"ops", std::move(ops)}}; };
  auto data_sum = [&](const std::string* type) {
    Decimal s(BigInt(0), 2);
    for (const Line* l : data)
      if (!type || l->type == *type) s += l->amounts[ac];
    return s;
  };
  auto all_rows_sum = [&] {
    Decimal s(BigInt(0), 2);
    for (const Line& l : t.body) s += l.amounts[ac];
    return s;
  };
  // Data rows whose act label occurs once, so LOOKUP "first" is unambiguous.
  std::vector<const Line*> unique;
  for (const Line* l : data) {
    const auto n = std::count_if(data.begin(), data.end(), [&](const Line* o) { return o->act == l->act; });
    if (n == 1) unique.push_back(l);
  }
  if (unique.empty()) unique.push_back(data.front());

  Question q{c, {}, {}, {}, nullptr};
  switch (c) {
    case QuestionCategory::lookup_by_header: {
      const Line* l = rng.pick(unique);
      q.text = "Quel est le montant « " + amount_name + " » pour l'acte « " + l->act + " » ?";
      q.gold = l->amount_text[ac];
      q.naive = q.gold;
      q.program = program({{{"op", "LOOKUP"}, {"key_col", "Acte"}, {"key_value", l->act}, {"target_col", H},
                            {"mode", "first"}, {"empty_to_na", false}}});
      break;
    }
    case QuestionCategory::lookup_list_by_header: {
      const auto types = present_types(t);
      const std::string type = rng.pick(types);
      std::vector<std::string> acts_of;
      for (const Line* l : data)
        if (l->type == type) acts_of.push_back(l->act);
      q.text = "Quels sont les actes de type « " + type + " » ?";
      q.gold = text::join(acts_of, "; ");
      q.naive = q.gold;
      q.program = program({{{"op", "LOOKUP"}, {"key_col", "Type"}, {"key_value", type}, {"target_col", "Acte"},
                            {"mode", "all"}, {"empty_to_na", false}}});
      break;
    }
    case QuestionCategory::kth_row_value: {
      const long long k = rng.uniform(1, static_cast<long long>(std::min(cfg.kth_max, data.size())));
      q.text = "Quel est le montant « " + amount_name + " » de la ligne d'acte numéro " + std::to_string(k) + " ?";
      q.gold = data[static_cast<size_t>(k - 1)]->amount_text[ac];
      q.naive = q.gold;
      q.program = program({{{"op", "KTH_ROW"}, {"k", k}, {"target_col", H}, {"data_only", true}}});
      break;
    }
    case QuestionCategory::na_from_empty: {
      std::vector<const Line*> empty;
      for (const Line* l : unique)
        if (l->tooth.empty()) empty.push_back(l);
      const Line* l = !empty.empty() && rng.bernoulli(0.7) ? rng.pick(empty) : rng.pick(unique);
      q.text = "Quelle est la dent concernée par l'acte « " + l->act + " » (N/A si la cellule est vide) ?";
      q.gold = l->tooth.empty() ? "N/A" : l->tooth;
      q.naive = q.gold;
      q.program = program({{{"op", "LOOKUP"}, {"key_col", "Acte"}, {"key_value", l->act}, {"target_col", "Dent"},
                            {"mode", "first"}, {"empty_to_na", true}}});
      break;
    }
    case QuestionCategory::total_row_value: {
      q.text = "Quel est le montant « " + amount_name + " » indiqué sur la ligne de total ?";
      q.gold = t.body[*t.total_pos].amount_text[ac];
      q.naive = q.gold;
      q.program = program({{{"op", "KEEP_ROLES"}, {"roles", {"total", "subtotal"}}},
                           {{"op", "KTH_ROW"}, {"k", "last"}, {"target_col", H}, {"data_only", false}}});
      break;
    }
    case QuestionCategory::aggregation_sum: {
      q.text = "Quelle est la somme des montants « " + amount_name + " » de tous les actes ?";
      q.gold = fmt(data_sum(nullptr), conv);
      q.naive = fmt(all_rows_sum(), conv);
      q.program = program({op_exclude(), {{"op", "SUM"}, {"col", H}}});
      break;
    }
    case QuestionCategory::aggregation_sum_conditional: {
      const auto types = present_types(t);
      const std::string type = rng.pick(types);
      q.text = "Quelle est la somme des montants « " + amount_name + " » pour les actes de type « " + type + " » ?";
      q.gold = fmt(data_sum(&type), conv);
      q.naive = fmt(data_sum(nullptr) + Decimal(BigInt(100), 2), conv);
      q.program = program({op_exclude(), {{"op", "FILTER_EQ"}, {"col", "Type"}, {"value", type}}, {{"op", "SUM"}, {"col", H}}});
      break;
    }
    case QuestionCategory::comparison_argmax:
    case QuestionCategory::comparison_argmax_rows: {
      Decimal best = data.front()->amounts[ac];
      for (const Line* l : data) best = std::max(best, l->amounts[ac]);
      std::vector<std::string> winners;
      for (const Line* l : data)
        if (l->amounts[ac] == best)
          winners.push_back(c == QuestionCategory::comparison_argmax ? l->act : std::to_string(l->body_index));
      const bool rows = c == QuestionCategory::comparison_argmax_rows;
      q.text = rows ? "Quel est le numéro de la ligne dont le montant « " + amount_name + " » est le plus élevé ?"
                    : "Quel acte a le montant « " + amount_name + " » le plus élevé ?";
      q.gold = text::join(winners, "; ");
      q.naive = q.gold;
      q.program = program({op_exclude(), {{"op", "ARGMAX"}, {"col", H}, {"return", rows ? "row_index" : "col:Acte"},
                                          {"all_ties", true}}});
      break;
    }
    case QuestionCategory::count_equals: {
      const auto types = present_types(t);
      const std::string type = rng.pick(types);
      const auto n = std::count_if(data.begin(), data.end(), [&](const Line* l) { return l->type == type; });
      q.text = "Combien d'actes sont de type « " + type + " » ?";
      q.gold = std::to_string(n);
      q.naive = std::to_string(n + 1);
      q.program = program({op_exclude(), {{"op", "COUNT"}, {"col", "Type"}, {"value", type}}});
      break;
    }
    case QuestionCategory::consistency_diff_total: {
      const Decimal printed = t.body[*t.total_pos].amounts[ac];
      const Decimal diff = printed - data_sum(nullptr);
      q.text = "Quelle est la différence entre le total « " + amount_name + " » imprimé et la somme des lignes d'actes ?";
      q.gold = fmt(diff, conv);
      q.naive = fmt(diff + Decimal(BigInt(1000), 2), conv);
      json a{{"ops", {{{"op", "KEEP_ROLES"}, {"roles", {"total"}}},
                      {{"op", "KTH_ROW"}, {"k", "last"}, {"target_col", H}, {"data_only", false}}}}};
      json b{{"ops", {op_exclude(), {{"op", "SUM"}, {"col", H}}}}};
      q.program = program({{{"op", "DIFF"}, {"a", a}, {"b", b}}});
      break;
    }
    case QuestionCategory::other: {
      q.text = "Combien de colonnes compte le tableau ?";
      q.gold = std::to_string(t.headers.size());
      q.naive = q.gold;
      break;
    }
  }
  return q;
}

}  // namespace

const std::vector<std::string>& dental_acts() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& a : acts()) v.push_back(a.name);
    return v;
  }();
  return names;
}

void validate(const SynthConfig& cfg) {
  auto infeasible = [](const std::string& m) { throw Error(ErrorCode::InfeasibleConfig, m); };
  if (cfg.rows_min < 1 || cfg.rows_min > cfg.rows_max) infeasible("rows range must satisfy 1 <= rows_min <= rows_max");
  if (cfg.amount_cols_min < 1 || cfg.amount_cols_min > cfg.amount_cols_max || cfg.amount_cols_max > kAmountHeaders.size())
    infeasible("amount column range must lie within 1.." + std::to_string(kAmountHeaders.size()));
  for (double p : {cfg.span_probability, cfg.subtotal_probability, cfg.total_probability,
                   cfg.inconsistent_total_probability, cfg.empty_tooth_probability, cfg.grouping_probability})
    if (!(p >= 0.0 && p <= 1.0)) infeasible("probabilities must lie in [0, 1]");
  double total = 0;
  for (double w : cfg.category_weights) {
    if (w < 0) infeasible("category weights must be non-negative");
    total += w;
  }
  if (total <= 0) infeasible("at least one category weight must be positive");
  if (cfg.questions_per_sample < 1) infeasible("questions_per_sample must be >= 1");
  if (cfg.category_weights[category_index(QuestionCategory::kth_row_value)] > 0 &&
      (cfg.kth_max < 1 || cfg.rows_min < cfg.kth_max))
    infeasible("kth_row_value asks for rows up to k=" + std::to_string(cfg.kth_max) + " but tables may have only " +
               std::to_string(cfg.rows_min) + " data rows");
  double needs_total = cfg.category_weights[category_index(QuestionCategory::total_row_value)] +
                       cfg.category_weights[category_index(QuestionCategory::consistency_diff_total)];
  if (needs_total > 0 && total - needs_total <= 0 && cfg.total_probability < 1.0)
    infeasible("only total-row categories requested but total rows are optional");
}

std::vector<GeneratedSample> generate_synthetic(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  std::vector<GeneratedSample> out;
  out.reserve(cfg.n_samples);
  for (size_t s = 0; s < cfg.n_samples; ++s) {
    Table t = build_table(cfg, rng);
    while (!t.total_pos && [&] {
      double total = 0, needs = 0;
      for (QuestionCategory c : kAllCategories) {
        total += cfg.category_weights[category_index(c)];
        if (!feasible(c, t)) needs += cfg.category_weights[category_index(c)];
      }
      return total - needs <= 0;
    }())
      t = build_table(cfg, rng);

    GeneratedSample g;
    g.sample.id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(s + 1);
    const bool merge_types = t.merged_header && rng.bernoulli(0.5);
    g.sample.gt_html = render_html(t, merge_types);
    g.has_spanning_cell = t.merged_header;
    std::vector<RowRole> roles(t.merged_header ? 2 : 1, RowRole::header);
    for (const Line& l : t.body) roles.push_back(l.role);
    g.sample.row_roles = roles;

    std::vector<QuestionCategory> chosen;
    for (size_t qi = 0; qi < cfg.questions_per_sample; ++qi) {
      double total = 0;
      for (QuestionCategory c : kAllCategories) {
        const double w = feasible(c, t) ? cfg.category_weights[category_index(c)] : 0.0;
        const bool repeat = std::find(chosen.begin(), chosen.end(), c) != chosen.end();
        total += repeat ? w * 0.05 : w;
      }
      double x = rng.unit() * total;
      QuestionCategory pick = QuestionCategory::other;
      for (QuestionCategory c : kAllCategories) {
        double w = feasible(c, t) ? cfg.category_weights[category_index(c)] : 0.0;
        if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) w *= 0.05;
        if (w <= 0) continue;
        pick = c;
        if (x < w) break;
        x -= w;
      }
      chosen.push_back(pick);
      Question q = make_question(pick, t, cfg, rng);
      SampleQuestion sq;
      sq.qid = qi + 1;
      sq.text = q.text;
      sq.gold_category = pick;
      sq.gold_answer = q.gold;
      if (!q.program.is_null()) sq.program = q.program;
      g.sample.questions.push_back(std::move(sq));
      g.naive_answers.push_back(q.naive);
    }
    out.push_back(std::move(g));
  }
  return out;
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  c.n_samples = j.value("n_samples", c.n_samples);
  c.rows_min = j.value("rows_min", c.rows_min);
  c.rows_max = j.value("rows_max", c.rows_max);
  c.amount_cols_min = j.value("amount_cols_min", c.amount_cols_min);
  c.amount_cols_max = j.value("amount_cols_max", c.amount_cols_max);
  c.span_probability = j.value("span_probability", c.span_probability);
  c.subtotal_probability = j.value("subtotal_probability", c.subtotal_probability);
  c.total_probability = j.value("total_probability", c.total_probability);
  c.inconsistent_total_probability = j.value("inconsistent_total_probability", c.inconsistent_total_probability);
  c.empty_tooth_probability = j.value("empty_tooth_probability", c.empty_tooth_probability);
  c.grouping_probability = j.value("grouping_probability", c.grouping_probability);
  if (j.contains("convention")) {
    auto conv = convention_from_string(j.at("convention").get<std::string>());
    if (!conv) throw Error(ErrorCode::InfeasibleConfig, "unknown convention " + j.at("convention").dump());
    c.convention = *conv;
  }
  if (j.contains("category_weights")) {
    c.category_weights.fill(0.0);
    for (const auto& [k, v] : j.at("category_weights").items()) {
      auto cat = category_from_string(k);
      if (!cat) throw Error(ErrorCode::InfeasibleConfig, "unknown category " + k);
      c.category_weights[category_index(*cat)] = v.get<double>();
    }
  }
  c.questions_per_sample = j.value("questions_per_sample", c.questions_per_sample);
  c.kth_max = j.value("kth_max", c.kth_max);
  c.seed = j.value("seed", c.seed);
  return c;
}

json SynthConfig::to_json() const {
  json weights = json::object();
  for (QuestionCategory c : kAllCategories) weights[std::string(tablerouter::to_string(c))] = category_weights[category_index(c)];
  return {{"n_samples", n_samples},
          {"rows_min", rows_min},
          {"rows_max", rows_max},
          {"amount_cols_min", amount_cols_min},
          {"amount_cols_max", amount_cols_max},
          {"span_probability", span_probability},
          {"subtotal_probability", subtotal_probability},
          {"total_probability", total_probability},
          {"inconsistent_total_probability", inconsistent_total_probability},
          {"empty_tooth_probability", empty_tooth_probability},
          {"grouping_probability", grouping_probability},
          {"convention", tablerouter::to_string(convention)},
          {"category_weights", weights},
          {"questions_per_sample", questions_per_sample},
          {"kth_max", kth_max},
          {"seed", seed}};
}

namespace {
std::string question_block(const std::vector<std::string>& qs) {
  std::string out;
  for (size_t i = 0; i < qs.size(); ++i) {
    if (i) out += '\n';
    out += "Q" + std::to_string(i + 1) + ": " + qs[i];
  }
  return out;
}
}  // namespace

json perfect_script(const std::vector<GeneratedSample>& samples, bool include_tsr_html) {
  json entries = json::array();
  for (const auto& g : samples) {
    std::vector<std::string> texts, categories;
    std::vector<std::string> starred_texts;
    json programs = json::array();
    for (const auto& q : g.sample.questions) {
      texts.push_back(q.text);
      categories.emplace_back(to_string(q.gold_category));
      if (is_starred(q.gold_category)) {
        starred_texts.push_back(q.text);
        json p = q.program.value_or(json{{"ops", json::array()}});
        p["qid"] = starred_texts.size();
        programs.push_back(p);
      }
    }
    const std::string block = question_block(texts);
    entries.push_back({{"stage", "direct_qa"}, {"match", block}, {"reply", json{{"answers", g.naive_answers}}.dump()}});
    entries.push_back({{"stage", "route"}, {"match", block}, {"reply", json{{"categories", categories}}.dump()}});
    if (!starred_texts.empty()) {
      if (include_tsr_html) entries.push_back({{"stage", "tsr"}, {"reply", g.sample.gt_html}});
      const TableJson tj = to_table_json(parse_table(sanitize_html(g.sample.gt_html)), *g.sample.row_roles);
      entries.push_back({{"stage", "plan"},
                         {"match", to_json(tj).dump() + "\n\nCATEGORY_HINTS:"},
                         {"reply", json{{"programs", programs}}.dump()}});
    }
  }
  return entries;
}

}  // namespace tablerouter

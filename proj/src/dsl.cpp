#include "tablerouter/dsl.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/json_extract.hpp"
#include "tablerouter/text.hpp"

#include <algorithm>

namespace tablerouter::dsl {

using nlohmann::json;

std::string_view to_string(ExecErrorKind kind) {
  switch (kind) {
    case ExecErrorKind::UnknownOp: return "UnknownOp";
    case ExecErrorKind::UnknownHeader: return "UnknownHeader";
    case ExecErrorKind::BadShape: return "BadShape";
    case ExecErrorKind::EmptySelection: return "EmptySelection";
    case ExecErrorKind::NoNumericValues: return "NoNumericValues";
    case ExecErrorKind::NonNumericOperand: return "NonNumericOperand";
  }
  return "BadShape";
}

std::string ExecError::describe() const { return std::string(to_string(kind)) + ": " + message; }

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

struct DecodeError {
  ExecError error;
};

[[noreturn]] void fail(ExecErrorKind kind, std::string msg) { throw DecodeError{ExecError{kind, std::move(msg)}}; }

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return {};
}

std::string req_string(const json& o, const char* op, const char* key) {
  if (!o.contains(key) || !(o.at(key).is_string() || o.at(key).is_number()))
    fail(ExecErrorKind::BadShape, std::string(op) + " requires a string field \"" + key + "\"");
  return scalar_to_string(o.at(key));
}

std::optional<std::string> opt_string(const json& o, const char* op, const char* key) {
  if (!o.contains(key) || o.at(key).is_null()) return std::nullopt;
  return req_string(o, op, key);
}

bool opt_bool(const json& o, const char* op, const char* key, bool dflt) {
  if (!o.contains(key) || o.at(key).is_null()) return dflt;
  const json& v = o.at(key);
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = text::to_lower_ascii(v.get<std::string>());
    if (s == "true") return true;
    if (s == "false") return false;
  }
  fail(ExecErrorKind::BadShape, std::string(op) + " field \"" + key + "\" must be true or false");
}

std::vector<std::string> req_roles(const json& o, const char* op) {
  if (!o.contains("roles")) fail(ExecErrorKind::BadShape, std::string(op) + " requires \"roles\"");
  const json& v = o.at("roles");
  std::vector<std::string> roles;
  if (v.is_string()) {
    roles.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& r : v) {
      if (!r.is_string()) fail(ExecErrorKind::BadShape, std::string(op) + " roles must be strings");
      roles.push_back(r.get<std::string>());
    }
  } else {
    fail(ExecErrorKind::BadShape, std::string(op) + " roles must be a list of strings");
  }
  return roles;
}

std::string op_kind(const json& o) {
  if (!o.is_object()) fail(ExecErrorKind::BadShape, "each op must be a JSON object");
  if (!o.contains("op") || !o.at("op").is_string()) fail(ExecErrorKind::BadShape, "op object without \"op\" name");
  std::string name = o.at("op").get<std::string>();
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return name;
}

std::optional<ContextOp> decode_context(const std::string& kind, const json& o) {
  if (kind == "EXCLUDE_ROLES") return ExcludeRoles{req_roles(o, "EXCLUDE_ROLES")};
  if (kind == "KEEP_ROLES") return KeepRoles{req_roles(o, "KEEP_ROLES")};
  if (kind == "FILTER_EQ") return FilterEq{req_string(o, "FILTER_EQ", "col"), req_string(o, "FILTER_EQ", "value")};
  if (kind == "SORT") {
    Sort s;
    s.col = req_string(o, "SORT", "col");
    const std::string order = text::to_lower_ascii(opt_string(o, "SORT", "order").value_or("asc"));
    if (order != "asc" && order != "desc") fail(ExecErrorKind::BadShape, "SORT order must be \"asc\" or \"desc\"");
    s.descending = order == "desc";
    s.numeric = opt_bool(o, "SORT", "numeric", false);
    return s;
  }
  return std::nullopt;
}

std::optional<OperandOp> decode_operand_op(const std::string& kind, const json& o) {
  if (kind == "LOOKUP") {
    Lookup l;
    l.key_col = req_string(o, "LOOKUP", "key_col");
    l.key_value = req_string(o, "LOOKUP", "key_value");
    l.target_col = req_string(o, "LOOKUP", "target_col");
    const std::string mode = text::to_lower_ascii(opt_string(o, "LOOKUP", "mode").value_or("first"));
    if (mode != "first" && mode != "all") fail(ExecErrorKind::BadShape, "LOOKUP mode must be \"first\" or \"all\"");
    l.all = mode == "all";
    l.empty_to_na = opt_bool(o, "LOOKUP", "empty_to_na", false);
    return l;
  }
  if (kind == "KTH_ROW") {
    KthRow k;
    if (!o.contains("k")) fail(ExecErrorKind::BadShape, "KTH_ROW requires \"k\"");
    const json& kv = o.at("k");
    if (kv.is_number_integer()) {
      k.k = kv.get<long long>();
    } else if (kv.is_string()) {
      const std::string s = text::to_lower_ascii(text::trim(kv.get<std::string>()));
      if (s == "last") {
        k.k = std::nullopt;
      } else {
        try {
          size_t used = 0;
          k.k = std::stoll(s, &used);
          if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
          fail(ExecErrorKind::BadShape, "KTH_ROW k must be a positive integer or \"last\"");
        }
      }
    } else {
      fail(ExecErrorKind::BadShape, "KTH_ROW k must be a positive integer or \"last\"");
    }
    k.target_col = req_string(o, "KTH_ROW", "target_col");
    k.data_only = opt_bool(o, "KTH_ROW", "data_only", false);
    return k;
  }
  if (kind == "SUM") return Sum{req_string(o, "SUM", "col")};
  if (kind == "COUNT") return Count{req_string(o, "COUNT", "col"), opt_string(o, "COUNT", "value")};
  return std::nullopt;
}

bool is_known(const std::string& kind) {
  static const char* kKnown[] = {"EXCLUDE_ROLES", "KEEP_ROLES", "FILTER_EQ", "SORT", "LOOKUP",
                                 "KTH_ROW",       "SUM",        "COUNT",     "ARGMAX", "DIFF"};
  return std::find(std::begin(kKnown), std::end(kKnown), kind) != std::end(kKnown);
}

DiffOperand decode_diff_operand(const json& o, const char* side) {
  DiffOperand operand;
  if (o.is_object() && !o.contains("op") && o.contains("ops")) {
    const json& ops = o.at("ops");
    if (!ops.is_array() || ops.empty())
      fail(ExecErrorKind::BadShape, std::string("DIFF.") + side + ".ops must be a non-empty list");
    for (size_t i = 0; i + 1 < ops.size(); ++i) {
      const std::string kind = op_kind(ops[i]);
      if (!is_known(kind)) fail(ExecErrorKind::UnknownOp, "unknown op \"" + kind + "\"");
      auto ctx = decode_context(kind, ops[i]);
      if (!ctx)
        fail(ExecErrorKind::BadShape, std::string("DIFF.") + side + ": context ops must precede its terminal op");
      operand.context.push_back(*ctx);
    }
    const std::string kind = op_kind(ops.back());
    if (!is_known(kind)) fail(ExecErrorKind::UnknownOp, "unknown op \"" + kind + "\"");
    auto term = decode_operand_op(kind, ops.back());
    if (!term)
      fail(ExecErrorKind::BadShape, std::string("DIFF.") + side + " must end with SUM, COUNT, KTH_ROW or LOOKUP");
    operand.op = *term;
    return operand;
  }
  const std::string kind = op_kind(o);
  if (!is_known(kind)) fail(ExecErrorKind::UnknownOp, "unknown op \"" + kind + "\"");
  auto term = decode_operand_op(kind, o);
  if (!term)
    fail(ExecErrorKind::BadShape, std::string("DIFF.") + side + " must be SUM, COUNT, KTH_ROW or LOOKUP, got " + kind);
  operand.op = *term;
  return operand;
}

Op decode_op(const json& o) {
  const std::string kind = op_kind(o);
  if (!is_known(kind)) fail(ExecErrorKind::UnknownOp, "unknown op \"" + kind + "\"");
  if (auto ctx = decode_context(kind, o)) return std::visit([](auto&& v) -> Op { return v; }, *ctx);
  if (auto term = decode_operand_op(kind, o)) return std::visit([](auto&& v) -> Op { return v; }, *term);
  if (kind == "ARGMAX") {
    Argmax a;
    a.col = req_string(o, "ARGMAX", "col");
    const std::string ret = opt_string(o, "ARGMAX", "return").value_or("row_index");
    if (ret.rfind("col:", 0) == 0) {
      a.return_col = ret.substr(4);
    } else if (ret != "row_index") {
      fail(ExecErrorKind::BadShape, "ARGMAX return must be \"row_index\" or \"col:<header>\"");
    }
    a.all_ties = opt_bool(o, "ARGMAX", "all_ties", false);
    return a;
  }
  // DIFF
  if (!o.contains("a") || !o.contains("b")) fail(ExecErrorKind::BadShape, "DIFF requires \"a\" and \"b\"");
  return Diff{decode_diff_operand(o.at("a"), "a"), decode_diff_operand(o.at("b"), "b")};
}

json roles_json(const std::vector<std::string>& roles) { return roles; }

}  // namespace

bool is_context(const Op& op) {
  return std::holds_alternative<ExcludeRoles>(op) || std::holds_alternative<KeepRoles>(op) ||
         std::holds_alternative<FilterEq>(op) || std::holds_alternative<Sort>(op);
}

std::string_view op_name(const Op& op) {
  return std::visit(overloaded{
                        [](const ExcludeRoles&) { return std::string_view("EXCLUDE_ROLES"); },
                        [](const KeepRoles&) { return std::string_view("KEEP_ROLES"); },
                        [](const FilterEq&) { return std::string_view("FILTER_EQ"); },
                        [](const Sort&) { return std::string_view("SORT"); },
                        [](const Lookup&) { return std::string_view("LOOKUP"); },
                        [](const KthRow&) { return std::string_view("KTH_ROW"); },
                        [](const Sum&) { return std::string_view("SUM"); },
                        [](const Count&) { return std::string_view("COUNT"); },
                        [](const Argmax&) { return std::string_view("ARGMAX"); },
                        [](const Diff&) { return std::string_view("DIFF"); },
                    },
                    op);
}

json to_json(const ContextOp& op) {
  return std::visit([](auto&& v) { return to_json(Op{v}); }, op);
}

json to_json(const OperandOp& op) {
  return std::visit([](auto&& v) { return to_json(Op{v}); }, op);
}

namespace {
json operand_json(const DiffOperand& d) {
  if (d.context.empty()) return to_json(d.op);
  json ops = json::array();
  for (const auto& c : d.context) ops.push_back(to_json(c));
  ops.push_back(to_json(d.op));
  return {{"ops", ops}};
}
}  // namespace

json to_json(const Op& op) {
  return std::visit(
      overloaded{
          [](const ExcludeRoles& o) { return json{{"op", "EXCLUDE_ROLES"}, {"roles", roles_json(o.roles)}}; },
          [](const KeepRoles& o) { return json{{"op", "KEEP_ROLES"}, {"roles", roles_json(o.roles)}}; },
          [](const FilterEq& o) { return json{{"op", "FILTER_EQ"}, {"col", o.col}, {"value", o.value}}; },
          [](const Sort& o) {
            return json{{"op", "SORT"}, {"col", o.col}, {"order", o.descending ? "desc" : "asc"}, {"numeric", o.numeric}};
          },
          [](const Lookup& o) {
            return json{{"op", "LOOKUP"},          {"key_col", o.key_col},
                        {"key_value", o.key_value}, {"target_col", o.target_col},
                        {"mode", o.all ? "all" : "first"}, {"empty_to_na", o.empty_to_na}};
          },
          [](const KthRow& o) {
            json k = o.k ? json(*o.k) : json("last");
            return json{{"op", "KTH_ROW"}, {"k", k}, {"target_col", o.target_col}, {"data_only", o.data_only}};
          },
          [](const Sum& o) { return json{{"op", "SUM"}, {"col", o.col}}; },
          [](const Count& o) {
            json j{{"op", "COUNT"}, {"col", o.col}};
            if (o.value) j["value"] = *o.value;
            return j;
          },
          [](const Argmax& o) {
            return json{{"op", "ARGMAX"},
                        {"col", o.col},
                        {"return", o.return_col ? "col:" + *o.return_col : std::string("row_index")},
                        {"all_ties", o.all_ties}};
          },
          [](const Diff& o) { return json{{"op", "DIFF"}, {"a", operand_json(o.a)}, {"b", operand_json(o.b)}}; },
      },
      op);
}

json to_json(const Program& p) {
  json ops = json::array();
  for (const auto& op : p.ops) ops.push_back(to_json(op));
  return {{"qid", p.qid}, {"ops", ops}};
}

Program parse_program(const json& obj, size_t default_qid) {
  Program p;
  p.qid = default_qid;
  p.source = obj;
  try {
    if (!obj.is_object()) fail(ExecErrorKind::BadShape, "program must be a JSON object");
    if (obj.contains("qid")) {
      const json& q = obj.at("qid");
      if (q.is_number_integer() && q.get<long long>() > 0) {
        p.qid = static_cast<size_t>(q.get<long long>());
      } else if (q.is_string()) {
        try {
          const long long v = std::stoll(q.get<std::string>());
          if (v > 0) p.qid = static_cast<size_t>(v);
        } catch (const std::exception&) {
        }
      }
    }
    if (!obj.contains("ops") || !obj.at("ops").is_array())
      fail(ExecErrorKind::BadShape, "program requires an \"ops\" list");
    for (const auto& o : obj.at("ops")) p.ops.push_back(decode_op(o));
  } catch (const DecodeError& e) {
    p.ops.clear();
    p.parse_error = e.error;
  }
  return p;
}

std::vector<Program> parse_programs(std::string_view planner_output) {
  const auto j = extract_json(planner_output);
  if (!j) throw Error(ErrorCode::NoJsonObject, "planner output contains no JSON object");
  std::vector<Program> out;
  const json* list = nullptr;
  if (j->is_object() && j->contains("programs")) list = &j->at("programs");
  else if (j->is_array()) list = &*j;
  if (list) {
    if (!list->is_array()) return out;
    size_t i = 0;
    for (const auto& item : *list) out.push_back(parse_program(item, ++i));
    return out;
  }
  if (j->is_object() && j->contains("ops")) out.push_back(parse_program(*j, 1));
  return out;
}

namespace {

struct Checker {
  const TableJson& t;

  std::optional<ExecError> header(const std::string& h, std::string_view where) const {
    if (t.column(h)) return std::nullopt;
    return ExecError{ExecErrorKind::UnknownHeader,
                     "unknown header \"" + h + "\" in " + std::string(where) +
                         "; use one of TABLE_JSON.headers " + json(t.headers).dump()};
  }

  static std::optional<ExecError> roles(const std::vector<std::string>& rs, std::string_view where) {
    for (const auto& r : rs)
      if (!row_role_from_string(r))
        return ExecError{ExecErrorKind::BadShape,
                         std::string(where) + ": unknown role \"" + r + "\" (expected data, subtotal, total)"};
    return std::nullopt;
  }

  std::optional<ExecError> context(const ContextOp& op) const {
    return std::visit(overloaded{
                          [&](const ExcludeRoles& o) { return roles(o.roles, "EXCLUDE_ROLES"); },
                          [&](const KeepRoles& o) { return roles(o.roles, "KEEP_ROLES"); },
                          [&](const FilterEq& o) { return header(o.col, "FILTER_EQ.col"); },
                          [&](const Sort& o) { return header(o.col, "SORT.col"); },
                      },
                      op);
  }

  std::optional<ExecError> operand(const OperandOp& op) const {
    return std::visit(overloaded{
                          [&](const Lookup& o) -> std::optional<ExecError> {
                            if (auto e = header(o.key_col, "LOOKUP.key_col")) return e;
                            return header(o.target_col, "LOOKUP.target_col");
                          },
                          [&](const KthRow& o) -> std::optional<ExecError> {
                            if (o.k && *o.k < 1)
                              return ExecError{ExecErrorKind::BadShape,
                                               "KTH_ROW k must be >= 1 or \"last\", got " + std::to_string(*o.k)};
                            return header(o.target_col, "KTH_ROW.target_col");
                          },
                          [&](const Sum& o) { return header(o.col, "SUM.col"); },
                          [&](const Count& o) { return header(o.col, "COUNT.col"); },
                      },
                      op);
  }

  std::optional<ExecError> diff_operand(const DiffOperand& d, const char* side) const {
    if (const auto* l = std::get_if<Lookup>(&d.op); l && l->all)
      return ExecError{ExecErrorKind::BadShape, std::string("DIFF.") + side + ": LOOKUP inside DIFF must use mode \"first\""};
    for (const auto& c : d.context)
      if (auto e = context(c)) return e;
    return operand(d.op);
  }

  std::optional<ExecError> op(const Op& o) const {
    return std::visit(overloaded{
                          [&](const Argmax& a) -> std::optional<ExecError> {
                            if (auto e = header(a.col, "ARGMAX.col")) return e;
                            if (a.return_col) return header(*a.return_col, "ARGMAX.return");
                            return std::nullopt;
                          },
                          [&](const Diff& d) -> std::optional<ExecError> {
                            if (auto e = diff_operand(d.a, "a")) return e;
                            return diff_operand(d.b, "b");
                          },
                          [&](const auto& v) -> std::optional<ExecError> {
                            using T = std::decay_t<decltype(v)>;
                            if constexpr (std::is_constructible_v<ContextOp, T>) return context(ContextOp{v});
                            else return operand(OperandOp{v});
                          },
                      },
                      o);
  }
};

}  // namespace

std::optional<ExecError> validate(const Program& p, const TableJson& t) {
  if (p.parse_error) return p.parse_error;
  if (p.ops.empty()) return ExecError{ExecErrorKind::BadShape, "program has no ops; expected context ops then one terminal op"};
  for (size_t i = 0; i + 1 < p.ops.size(); ++i) {
    if (!is_context(p.ops[i])) {
      return ExecError{ExecErrorKind::BadShape,
                       "terminal op " + std::string(op_name(p.ops[i])) + " at position " + std::to_string(i + 1) +
                           " must be the last op; put context ops (EXCLUDE_ROLES / KEEP_ROLES / FILTER_EQ / SORT) first"};
    }
  }
  if (is_context(p.ops.back())) {
    return ExecError{ExecErrorKind::BadShape,
                     "program ends with context op " + std::string(op_name(p.ops.back())) + "; a terminal op is required"};
  }
  const Checker checker{t};
  for (const auto& op : p.ops)
    if (auto e = checker.op(op)) return e;
  return std::nullopt;
}

namespace {

bool selects_roles(const ContextOp& op) {
  return std::holds_alternative<ExcludeRoles>(op) || std::holds_alternative<KeepRoles>(op);
}

bool has_role_op(const Program& p, bool keep_only) {
  auto matches = [&](const ContextOp& c) {
    return keep_only ? std::holds_alternative<KeepRoles>(c) : selects_roles(c);
  };
  for (const auto& op : p.ops) {
    if (keep_only ? std::holds_alternative<KeepRoles>(op)
                  : (std::holds_alternative<ExcludeRoles>(op) || std::holds_alternative<KeepRoles>(op)))
      return true;
    if (const auto* d = std::get_if<Diff>(&op)) {
      for (const auto* side : {&d->a, &d->b})
        for (const auto& c : side->context)
          if (matches(c)) return true;
    }
  }
  return false;
}

}  // namespace

Program normalize(const Program& p, QuestionCategory category) {
  Program out = p;
  switch (category) {
    case QuestionCategory::aggregation_sum:
    case QuestionCategory::aggregation_sum_conditional:
    case QuestionCategory::count_equals:
    case QuestionCategory::consistency_diff_total:
      if (!has_role_op(p, false)) out.ops.insert(out.ops.begin(), ExcludeRoles{{"total", "subtotal"}});
      break;
    case QuestionCategory::total_row_value:
      if (!has_role_op(p, true)) out.ops.insert(out.ops.begin(), KeepRoles{{"total", "subtotal"}});
      break;
    default:
      break;
  }
  return out;
}

}  // namespace tablerouter::dsl

#include "tablerouter/executor.hpp"

#include "tablerouter/text.hpp"

#include <algorithm>

namespace tablerouter::dsl {

using nlohmann::json;

bool cell_matches(std::string_view cell, std::string_view value) {
  if (text::fold(cell) == text::fold(value)) return true;
  const auto a = parse_amount(cell);
  if (!a) return false;
  const auto b = parse_amount(value);
  return b && a->value == b->value;
}

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

struct Failure {
  ExecError error;
};

[[noreturn]] void fail(ExecErrorKind kind, std::string msg) { throw Failure{ExecError{kind, std::move(msg)}}; }

// Positions into TableJson::rows.
using RowSet = std::vector<size_t>;

struct Value {
  std::string text;
  std::optional<Decimal> number;
  bool integer = false;  // COUNT results stay integral through DIFF
};

class Runner {
 public:
  Runner(const TableJson& t, const FormatPolicy& fmt, ExecTrace& trace) : t_(t), trace_(trace) {
    min_scale_ = fmt.min_scale;
    if (fmt.convention) {
      conv_ = *fmt.convention;
    } else {
      const auto cells = t.all_cells();
      conv_ = detect_convention(cells);
    }
  }

  RowSet all_rows() const {
    RowSet rows(t_.rows.size());
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
  }

  std::vector<size_t> indices(const RowSet& rows) const {
    std::vector<size_t> out;
    out.reserve(rows.size());
    for (size_t r : rows) out.push_back(t_.rows[r].index);
    return out;
  }

  size_t col(const std::string& h) const {
    auto c = t_.column(h);
    if (!c) fail(ExecErrorKind::UnknownHeader, "unknown header \"" + h + "\"");
    return *c;
  }

  const std::string& cell(size_t row, size_t c) const { return t_.rows[row].cells.at(c); }

  void contribute(size_t row, const std::string& header) {
    CellRef ref{t_.rows[row].index, header};
    if (std::find(trace_.contributing_cells.begin(), trace_.contributing_cells.end(), ref) ==
        trace_.contributing_cells.end())
      trace_.contributing_cells.push_back(std::move(ref));
  }

  std::string format(const Value& v) const {
    if (v.integer) return v.number->to_string();
    return format_amount(*v.number, conv_, min_scale_);
  }

  RowSet apply_context(const ContextOp& op, const RowSet& in, ExecStep& step) {
    RowSet out;
    std::visit(overloaded{
                   [&](const ExcludeRoles& o) {
                     for (size_t r : in)
                       if (!has_role(o.roles, t_.rows[r].role)) out.push_back(r);
                     step.note = "excluded roles " + text::join(o.roles, ",");
                   },
                   [&](const KeepRoles& o) {
                     for (size_t r : in)
                       if (has_role(o.roles, t_.rows[r].role)) out.push_back(r);
                     step.note = "kept roles " + text::join(o.roles, ",");
                   },
                   [&](const FilterEq& o) {
                     const size_t c = col(o.col);
                     for (size_t r : in)
                       if (cell_matches(cell(r, c), o.value)) out.push_back(r);
                     step.note = o.col + " == \"" + o.value + "\"";
                   },
                   [&](const Sort& o) {
                     out = sorted(o, in);
                     step.note = "sorted by " + o.col + (o.descending ? " desc" : " asc");
                   },
               },
               op);
    return out;
  }

  Value terminal(const Op& op, const RowSet& in, ExecStep& step) {
    return std::visit(
        overloaded{
            [&](const Lookup& o) { return lookup(o, in, step); },
            [&](const KthRow& o) { return kth_row(o, in, step); },
            [&](const Sum& o) { return sum(o, in, step); },
            [&](const Count& o) { return count(o, in, step); },
            [&](const Argmax& o) { return argmax(o, in, step); },
            [&](const Diff& o) { return diff(o, in, step); },
            [&](const auto&) -> Value { fail(ExecErrorKind::BadShape, "context op in terminal position"); },
        },
        op);
  }

  Value run_operand(const DiffOperand& d, const RowSet& shared, ExecStep& parent, const char* side) {
    RowSet rows = shared;
    for (const auto& c : d.context) {
      ExecStep s;
      s.op = std::string(op_name(std::visit([](auto&& v) { return Op{v}; }, c)));
      s.rows_in = indices(rows);
      rows = apply_context(c, rows, s);
      s.rows_out = indices(rows);
      parent.substeps.push_back(std::move(s));
    }
    ExecStep s;
    const Op term = std::visit([](auto&& v) { return Op{v}; }, d.op);
    s.op = std::string(op_name(term));
    s.rows_in = indices(rows);
    Value v;
    try {
      if (rows.empty() && !std::holds_alternative<Count>(d.op))
        fail(ExecErrorKind::EmptySelection, std::string("DIFF.") + side + ": no rows left for " + s.op);
      v = terminal(term, rows, s);
    } catch (const Failure&) {
      parent.substeps.push_back(std::move(s));
      throw;
    }
    parent.substeps.push_back(std::move(s));
    if (!v.number) {
      const auto parsed = parse_amount(v.text);
      if (!parsed)
        fail(ExecErrorKind::NonNumericOperand,
             std::string("DIFF.") + side + " (" + std::string(op_name(term)) + ") returned non-numeric \"" + v.text + "\"");
      v.number = parsed->value;
    }
    return v;
  }

 private:
  static bool has_role(const std::vector<std::string>& roles, RowRole role) {
    for (const auto& r : roles)
      if (row_role_from_string(text::to_lower_ascii(text::trim(r))) == role) return true;
    return false;
  }

  RowSet sorted(const Sort& o, const RowSet& in) const {
    const size_t c = col(o.col);
    RowSet out = in;
    if (o.numeric) {
      std::vector<std::optional<Decimal>> keys(t_.rows.size());
      for (size_t r : in)
        if (auto a = parse_amount(cell(r, c))) keys[r] = a->value;
      std::stable_sort(out.begin(), out.end(), [&](size_t a, size_t b) {
        if (!keys[a] || !keys[b]) return keys[a].has_value() && !keys[b].has_value();
        return o.descending ? *keys[b] < *keys[a] : *keys[a] < *keys[b];
      });
    } else {
      std::vector<std::string> keys(t_.rows.size());
      for (size_t r : in) keys[r] = text::fold(cell(r, c));
      std::stable_sort(out.begin(), out.end(), [&](size_t a, size_t b) {
        return o.descending ? keys[b] < keys[a] : keys[a] < keys[b];
      });
    }
    return out;
  }

  Value lookup(const Lookup& o, const RowSet& in, ExecStep& step) {
    const size_t kc = col(o.key_col);
    const size_t tc = col(o.target_col);
    std::vector<std::string> found;
    for (size_t r : in) {
      if (!cell_matches(cell(r, kc), o.key_value)) continue;
      step.rows_out.push_back(t_.rows[r].index);
      contribute(r, o.target_col);
      std::string v = cell(r, tc);
      if (v.empty() && o.empty_to_na) v = "N/A";
      found.push_back(std::move(v));
      if (!o.all) break;
    }
    if (found.empty())
      fail(ExecErrorKind::EmptySelection, "LOOKUP: no row with " + o.key_col + " == \"" + o.key_value + "\"");
    step.note = std::to_string(found.size()) + " match(es)";
    return Value{text::join(found, "; "), std::nullopt, false};
  }

  Value kth_row(const KthRow& o, const RowSet& in, ExecStep& step) {
    const size_t tc = col(o.target_col);
    RowSet rows;
    for (size_t r : in)
      if (!o.data_only || t_.rows[r].role == RowRole::data) rows.push_back(r);
    if (rows.empty()) fail(ExecErrorKind::EmptySelection, "KTH_ROW: no rows in context");
    size_t pos = rows.size() - 1;
    if (o.k) {
      if (*o.k < 1 || static_cast<unsigned long long>(*o.k) > rows.size())
        fail(ExecErrorKind::EmptySelection,
             "KTH_ROW: k=" + std::to_string(*o.k) + " but only " + std::to_string(rows.size()) + " row(s) in context");
      pos = static_cast<size_t>(*o.k - 1);
    }
    const size_t r = rows[pos];
    step.rows_out = {t_.rows[r].index};
    step.note = "row " + std::to_string(t_.rows[r].index);
    contribute(r, o.target_col);
    return Value{cell(r, tc), std::nullopt, false};
  }

  Value sum(const Sum& o, const RowSet& in, ExecStep& step) {
    const size_t c = col(o.col);
    Decimal total;
    size_t used = 0;
    std::vector<std::string> skipped;
    for (size_t r : in) {
      const std::string& s = cell(r, c);
      auto a = parse_amount(s);
      if (!a) {
        if (!s.empty()) skipped.push_back(std::to_string(t_.rows[r].index));
        continue;
      }
      total += a->value;
      ++used;
      step.rows_out.push_back(t_.rows[r].index);
      contribute(r, o.col);
    }
    if (used == 0) fail(ExecErrorKind::NoNumericValues, "SUM: no numeric values in column \"" + o.col + "\"");
    step.note = "summed " + std::to_string(used) + " cell(s)";
    if (!skipped.empty()) step.note += "; skipped non-numeric rows " + text::join(skipped, ",");
    return Value{{}, total, false};
  }

  Value count(const Count& o, const RowSet& in, ExecStep& step) {
    const size_t c = col(o.col);
    long long n = 0;
    for (size_t r : in) {
      contribute(r, o.col);
      if (o.value && !cell_matches(cell(r, c), *o.value)) continue;
      ++n;
      step.rows_out.push_back(t_.rows[r].index);
    }
    step.note = "count " + std::to_string(n);
    return Value{{}, Decimal::from_integer(n), true};
  }

  Value argmax(const Argmax& o, const RowSet& in, ExecStep& step) {
    const size_t c = col(o.col);
    const std::optional<size_t> rc = o.return_col ? std::optional<size_t>(col(*o.return_col)) : std::nullopt;
    std::optional<Decimal> best;
    RowSet winners;
    for (size_t r : in) {
      auto a = parse_amount(cell(r, c));
      if (!a) continue;
      if (!best || *best < a->value) {
        best = a->value;
        winners = {r};
      } else if (a->value == *best) {
        winners.push_back(r);
      }
    }
    if (!best) fail(ExecErrorKind::NoNumericValues, "ARGMAX: no numeric values in column \"" + o.col + "\"");
    if (!o.all_ties) winners.resize(1);
    std::vector<std::string> parts;
    for (size_t r : winners) {
      step.rows_out.push_back(t_.rows[r].index);
      contribute(r, o.col);
      if (rc) {
        contribute(r, *o.return_col);
        parts.push_back(cell(r, *rc));
      } else {
        parts.push_back(std::to_string(t_.rows[r].index));
      }
    }
    step.note = "max " + best->to_string();
    return Value{text::join(parts, "; "), std::nullopt, false};
  }

  Value diff(const Diff& o, const RowSet& in, ExecStep& step) {
    const Value a = run_operand(o.a, in, step, "a");
    const Value b = run_operand(o.b, in, step, "b");
    step.rows_out = indices(in);
    step.note = "a=" + a.number->to_string() + " b=" + b.number->to_string();
    return Value{{}, *a.number - *b.number, a.integer && b.integer};
  }

  const TableJson& t_;
  ExecTrace& trace_;
  Convention conv_ = Convention::comma_decimal;
  unsigned min_scale_ = 2;
};

bool is_numeric_terminal(const Op& op) {
  return std::holds_alternative<Sum>(op) || std::holds_alternative<Count>(op) || std::holds_alternative<Diff>(op);
}

}  // namespace

ExecResult execute(const Program& p, const TableJson& t, const FormatPolicy& fmt) {
  ExecResult result;
  ExecTrace& trace = result.trace;
  if (p.parse_error) {
    trace.outcome = *p.parse_error;
    return result;
  }
  if (auto err = validate(p, t)) {
    trace.outcome = *err;
    return result;
  }
  Runner runner(t, fmt, trace);
  RowSet rows = runner.all_rows();
  try {
    for (size_t i = 0; i < p.ops.size(); ++i) {
      const Op& op = p.ops[i];
      ExecStep step;
      step.op = std::string(op_name(op));
      step.rows_in = runner.indices(rows);
      if (is_context(op)) {
        const ContextOp ctx = std::visit(
            overloaded{[](const ExcludeRoles& o) { return ContextOp{o}; }, [](const KeepRoles& o) { return ContextOp{o}; },
                       [](const FilterEq& o) { return ContextOp{o}; }, [](const Sort& o) { return ContextOp{o}; },
                       [](const auto&) -> ContextOp { throw std::logic_error("not a context op"); }},
            op);
        rows = runner.apply_context(ctx, rows, step);
        step.rows_out = runner.indices(rows);
        trace.steps.push_back(std::move(step));
        continue;
      }
      trace.numeric_terminal = is_numeric_terminal(op);
      if (rows.empty() && !std::holds_alternative<Count>(op)) {
        trace.steps.push_back(std::move(step));
        fail(ExecErrorKind::EmptySelection, std::string(op_name(op)) + ": no rows left after context ops");
      }
      Value v;
      try {
        v = runner.terminal(op, rows, step);
      } catch (const Failure&) {
        trace.steps.push_back(std::move(step));
        throw;
      }
      trace.steps.push_back(std::move(step));
      trace.outcome = v.number ? runner.format(v) : v.text;
    }
  } catch (const Failure& f) {
    trace.outcome = f.error;
  }
  return result;
}

bool is_grounded(const ExecResult& r, const TableJson& t) {
  if (!r.ok() || text::trim(r.answer()).empty()) return false;
  if (r.trace.numeric_terminal && r.trace.contributing_cells.empty()) return false;
  for (const auto& c : r.trace.contributing_cells) {
    if (!t.column(c.header)) return false;
    const bool row_exists =
        std::any_of(t.rows.begin(), t.rows.end(), [&](const TableRow& row) { return row.index == c.row; });
    if (!row_exists) return false;
  }
  return true;
}

namespace {
json step_json(const ExecStep& s) {
  json j{{"op", s.op}, {"rows_in", s.rows_in}, {"rows_out", s.rows_out}, {"note", s.note}};
  if (!s.substeps.empty()) {
    json subs = json::array();
    for (const auto& sub : s.substeps) subs.push_back(step_json(sub));
    j["substeps"] = subs;
  }
  return j;
}
}  // namespace

json to_json(const ExecTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) steps.push_back(step_json(s));
  json cells = json::array();
  for (const auto& c : trace.contributing_cells) cells.push_back({{"row", c.row}, {"header", c.header}});
  json j{{"steps", steps}, {"contributing_cells", cells}};
  if (const auto* v = std::get_if<std::string>(&trace.outcome)) {
    j["outcome"] = {{"value", *v}};
  } else {
    const auto& e = std::get<ExecError>(trace.outcome);
    j["outcome"] = {{"error", {{"kind", to_string(e.kind)}, {"message", e.message}}}};
  }
  return j;
}

}  // namespace tablerouter::dsl

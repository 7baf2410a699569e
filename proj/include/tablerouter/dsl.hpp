#pragma once

#include "tablerouter/category.hpp"
#include "tablerouter/table_json.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tablerouter::dsl {

enum class ExecErrorKind {
  UnknownOp,
  UnknownHeader,
  BadShape,
  EmptySelection,
  NoNumericValues,
  NonNumericOperand,
};

std::string_view to_string(ExecErrorKind kind);

// Per-program failure; the message names the offending op or header and is
// forwarded verbatim to the repair prompt.
struct ExecError {
  ExecErrorKind kind;
  std::string message;

  std::string describe() const;
  friend bool operator==(const ExecError&, const ExecError&) = default;
};

struct ExcludeRoles {
  std::vector<std::string> roles;
  friend bool operator==(const ExcludeRoles&, const ExcludeRoles&) = default;
};
struct KeepRoles {
  std::vector<std::string> roles;
  friend bool operator==(const KeepRoles&, const KeepRoles&) = default;
};
struct FilterEq {
  std::string col;
  std::string value;
  friend bool operator==(const FilterEq&, const FilterEq&) = default;
};
struct Sort {
  std::string col;
  bool descending = false;
  bool numeric = false;
  friend bool operator==(const Sort&, const Sort&) = default;
};
struct Lookup {
  std::string key_col;
  std::string key_value;
  std::string target_col;
  bool all = false;
  bool empty_to_na = false;
  friend bool operator==(const Lookup&, const Lookup&) = default;
};
struct KthRow {
  std::optional<long long> k;  // nullopt means "last"
  std::string target_col;
  bool data_only = false;
  friend bool operator==(const KthRow&, const KthRow&) = default;
};
struct Sum {
  std::string col;
  friend bool operator==(const Sum&, const Sum&) = default;
};
struct Count {
  std::string col;
  std::optional<std::string> value;
  friend bool operator==(const Count&, const Count&) = default;
};
struct Argmax {
  std::string col;
  std::optional<std::string> return_col;  // nullopt means "row_index"
  bool all_ties = false;
  friend bool operator==(const Argmax&, const Argmax&) = default;
};

using ContextOp = std::variant<ExcludeRoles, KeepRoles, FilterEq, Sort>;
using OperandOp = std::variant<Lookup, KthRow, Sum, Count>;

// One side of DIFF. The optional context refines the shared working set for
// this side only; written on the wire as {"ops":[context..., terminal]}.
struct DiffOperand {
  std::vector<ContextOp> context;
  OperandOp op;
  friend bool operator==(const DiffOperand&, const DiffOperand&) = default;
};

struct Diff {
  DiffOperand a;
  DiffOperand b;
  friend bool operator==(const Diff&, const Diff&) = default;
};

using Op = std::variant<ExcludeRoles, KeepRoles, FilterEq, Sort, Lookup, KthRow, Sum, Count, Argmax, Diff>;

bool is_context(const Op& op);
std::string_view op_name(const Op& op);

struct Program {
  size_t qid = 0;
  std::vector<Op> ops;
  // Set when the program could not be decoded (unknown op, bad field types).
  std::optional<ExecError> parse_error;
  // The program object as the planner emitted it.
  nlohmann::json source;

  friend bool operator==(const Program& a, const Program& b) {
    return a.qid == b.qid && a.ops == b.ops && a.parse_error == b.parse_error;
  }
};

nlohmann::json to_json(const Op& op);
nlohmann::json to_json(const Program& p);
nlohmann::json to_json(const ContextOp& op);
nlohmann::json to_json(const OperandOp& op);

// Decodes one {"qid":..,"ops":[...]} object. Never throws; decoding failures
// become parse_error.
Program parse_program(const nlohmann::json& obj, size_t default_qid = 1);

// Extracts the first JSON object from raw planner output and decodes its
// "programs" array. Throws Error(NoJsonObject) when no object is found.
std::vector<Program> parse_programs(std::string_view planner_output);

// Checks ordering (context ops, then exactly one terminal), exact header
// membership, k >= 1, and role names. Returns the first violation.
std::optional<ExecError> validate(const Program& p, const TableJson& t);

// Rule-based normalization: non-total aggregations exclude total/subtotal
// rows unless the program already selects roles; total_row_value keeps them.
Program normalize(const Program& p, QuestionCategory category);

}  // namespace tablerouter::dsl

#pragma once

#include "tablerouter/amount.hpp"
#include "tablerouter/dsl.hpp"
#include "tablerouter/table_json.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tablerouter::dsl {

struct FormatPolicy {
  // Absent: majority convention of the table's cells.
  std::optional<Convention> convention;
  unsigned min_scale = 2;
};

struct ExecStep {
  std::string op;
  std::vector<size_t> rows_in;   // 1-based body indices
  std::vector<size_t> rows_out;
  std::string note;
  std::vector<ExecStep> substeps;  // DIFF operands
};

struct CellRef {
  size_t row = 0;  // 1-based body index
  std::string header;
  friend bool operator==(const CellRef&, const CellRef&) = default;
};

struct ExecTrace {
  std::vector<ExecStep> steps;
  std::vector<CellRef> contributing_cells;
  std::variant<std::string, ExecError> outcome;
  bool numeric_terminal = false;
};

struct ExecResult {
  ExecTrace trace;

  bool ok() const { return std::holds_alternative<std::string>(trace.outcome); }
  const std::string& answer() const { return std::get<std::string>(trace.outcome); }
  const ExecError& error() const { return std::get<ExecError>(trace.outcome); }
};

// Runs a validated, normalized program. Execution failures are reported in
// the trace outcome, never thrown.
ExecResult execute(const Program& p, const TableJson& t, const FormatPolicy& fmt = {});

// Non-empty answer, and for numeric terminals at least one contributing cell,
// all of which exist in the table.
bool is_grounded(const ExecResult& r, const TableJson& t);

// Cell equality used by FILTER_EQ, LOOKUP and COUNT: folded text, or equal
// decimal values when both sides parse.
bool cell_matches(std::string_view cell, std::string_view value);

nlohmann::json to_json(const ExecTrace& trace);

}  // namespace tablerouter::dsl

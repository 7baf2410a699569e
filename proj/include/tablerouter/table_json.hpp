#pragma once

#include "tablerouter/grid.hpp"

#include "json.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tablerouter {

struct TableRow {
  size_t index = 0;  // 1-based body index, in visual order
  RowRole role = RowRole::data;
  std::vector<std::string> cells;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

// Planner-facing table: flat headers plus body rows tagged with roles.
struct TableJson {
  std::vector<std::string> headers;
  std::vector<TableRow> rows;

  bool empty() const { return headers.empty() && rows.empty(); }
  // First column whose header equals `name` exactly.
  std::optional<size_t> column(std::string_view name) const;
  // Every body cell, row-major.
  std::vector<std::string> all_cells() const;

  friend bool operator==(const TableJson&, const TableJson&) = default;
};

// Header strings join the distinct non-empty header texts of each column
// top-to-bottom with " | "; merged header cells contribute their anchor text
// to every column they cover. An empty grid yields an empty TableJson.
TableJson to_table_json(const TableGrid& grid, std::span<const RowRole> roles);
TableJson to_table_json(const TableGrid& grid, const RoleKeywordConfig& keywords = {});

// Wire form: {"headers":[...],"rows":[{"index":1,"row_role":"data","cells":[...]}]}
nlohmann::json to_json(const TableJson& t);
TableJson table_json_from_json(const nlohmann::json& j);

}  // namespace tablerouter

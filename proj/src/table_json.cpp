#include "tablerouter/table_json.hpp"

#include "tablerouter/error.hpp"

#include <algorithm>

namespace tablerouter {

std::optional<size_t> TableJson::column(std::string_view name) const {
  for (size_t i = 0; i < headers.size(); ++i)
    if (headers[i] == name) return i;
  return std::nullopt;
}

std::vector<std::string> TableJson::all_cells() const {
  std::vector<std::string> out;
  for (const auto& r : rows) out.insert(out.end(), r.cells.begin(), r.cells.end());
  return out;
}

TableJson to_table_json(const TableGrid& grid, std::span<const RowRole> roles) {
  TableJson t;
  if (grid.n_rows() == 0) return t;
  if (roles.size() != grid.n_rows())
    throw Error(ErrorCode::InvalidArgument, "one role per grid row is required");

  const size_t header_rows = grid.header_row_count();
  t.headers.resize(grid.n_cols());
  for (size_t c = 0; c < grid.n_cols(); ++c) {
    std::vector<std::string> parts;
    for (size_t r = 0; r < header_rows; ++r) {
      const CellPos a = grid.anchor_of(r, c);
      const std::string& txt = grid.at(a.row, a.col).text;
      if (!txt.empty() && std::find(parts.begin(), parts.end(), txt) == parts.end())
        parts.push_back(txt);
    }
    for (size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) t.headers[c] += " | ";
      t.headers[c] += parts[i];
    }
  }
  for (size_t r = header_rows; r < grid.n_rows(); ++r) {
    RowRole role = roles[r] == RowRole::header ? RowRole::data : roles[r];
    t.rows.push_back(TableRow{r - header_rows + 1, role, grid.row_texts(r)});
  }
  return t;
}

TableJson to_table_json(const TableGrid& grid, const RoleKeywordConfig& keywords) {
  const auto roles = detect_row_roles(grid, keywords);
  return to_table_json(grid, roles);
}

nlohmann::json to_json(const TableJson& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"index", r.index}, {"row_role", std::string(to_string(r.role))}, {"cells", r.cells}});
  }
  return {{"headers", t.headers}, {"rows", rows}};
}

TableJson table_json_from_json(const nlohmann::json& j) {
  TableJson t;
  try {
    t.headers = j.at("headers").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      TableRow row;
      row.index = r.at("index").get<size_t>();
      const auto role = row_role_from_string(r.value("row_role", std::string("data")));
      if (!role || *role == RowRole::header)
        throw Error(ErrorCode::InvalidArgument, "invalid row_role in TABLE_JSON");
      row.role = *role;
      row.cells = r.at("cells").get<std::vector<std::string>>();
      if (row.cells.size() != t.headers.size())
        throw Error(ErrorCode::InvalidArgument, "row width differs from header count");
      t.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad TABLE_JSON: ") + e.what());
  }
  return t;
}

}  // namespace tablerouter

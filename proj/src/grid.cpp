#include "tablerouter/grid.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/text.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace tablerouter {

std::optional<TableGrid> TableGrid::from_anchors(size_t n_rows, size_t n_cols,
                                                 const std::vector<Anchor>& anchors,
                                                 size_t header_row_count) {
  TableGrid g;
  g.n_cols_ = n_cols;
  g.header_row_count_ = std::min(header_row_count, n_rows);
  g.cells_.assign(n_rows, std::vector<CellSlot>(n_cols));
  std::vector<std::vector<bool>> claimed(n_rows, std::vector<bool>(n_cols, false));
  for (const auto& a : anchors) {
    if (a.rowspan == 0 || a.colspan == 0) return std::nullopt;
    if (a.row + a.rowspan > n_rows || a.col + a.colspan > n_cols) return std::nullopt;
    for (size_t r = a.row; r < a.row + a.rowspan; ++r) {
      for (size_t c = a.col; c < a.col + a.colspan; ++c) {
        if (claimed[r][c]) return std::nullopt;
        claimed[r][c] = true;
        CellSlot& slot = g.cells_[r][c];
        if (r == a.row && c == a.col) {
          slot = CellSlot{a.text, true, a.rowspan, a.colspan, std::nullopt};
        } else {
          slot.anchor = false;
          slot.rowspan = slot.colspan = 1;
          slot.covered_by = CellPos{a.row, a.col};
          slot.text = c == a.col ? a.text : std::string();
        }
      }
    }
  }
  return g;
}

CellPos TableGrid::anchor_of(size_t r, size_t c) const {
  const CellSlot& s = at(r, c);
  return s.anchor ? CellPos{r, c} : *s.covered_by;
}

std::vector<TableGrid::Anchor> TableGrid::anchors() const {
  std::vector<Anchor> out;
  for (size_t r = 0; r < n_rows(); ++r) {
    for (size_t c = 0; c < n_cols_; ++c) {
      const CellSlot& s = cells_[r][c];
      if (s.anchor) out.push_back(Anchor{r, c, s.rowspan, s.colspan, s.text});
    }
  }
  return out;
}

std::vector<std::string> TableGrid::row_texts(size_t r) const {
  std::vector<std::string> out;
  out.reserve(n_cols_);
  for (const auto& s : cells_.at(r)) out.push_back(s.text);
  return out;
}

std::optional<std::string> TableGrid::check_invariants() const {
  if (header_row_count_ > n_rows()) return "header_row_count exceeds row count";
  std::vector<std::vector<int>> owners(n_rows(), std::vector<int>(n_cols_, 0));
  for (size_t r = 0; r < n_rows(); ++r) {
    if (cells_[r].size() != n_cols_) return "row " + std::to_string(r) + " is not n_cols wide";
  }
  for (size_t r = 0; r < n_rows(); ++r) {
    for (size_t c = 0; c < n_cols_; ++c) {
      const CellSlot& s = cells_[r][c];
      if (!s.anchor) {
        if (!s.covered_by) return "covered slot without anchor reference";
        if (s.rowspan != 1 || s.colspan != 1) return "covered slot with spans";
        const auto [ar, ac] = *s.covered_by;
        if (ar >= n_rows() || ac >= n_cols_ || !cells_[ar][ac].anchor)
          return "covered slot references a non-anchor";
        const CellSlot& a = cells_[ar][ac];
        if (r < ar || r >= ar + a.rowspan || c < ac || c >= ac + a.colspan)
          return "covered slot outside its anchor's span";
        const std::string& expected = c == ac ? a.text : std::string();
        if (s.text != expected) return "covered slot text mismatch";
        continue;
      }
      if (s.covered_by) return "anchor with covered_by";
      if (s.rowspan == 0 || s.colspan == 0) return "zero span";
      if (r + s.rowspan > n_rows() || c + s.colspan > n_cols_) return "span exceeds grid bounds";
      for (size_t dr = 0; dr < s.rowspan; ++dr)
        for (size_t dc = 0; dc < s.colspan; ++dc) {
          if (++owners[r + dr][c + dc] > 1) return "overlapping spans";
          if ((dr || dc) && (cells_[r + dr][c + dc].anchor ||
                             cells_[r + dr][c + dc].covered_by != CellPos{r, c}))
            return "span rectangle slot not covered by its anchor";
        }
    }
  }
  return std::nullopt;
}

size_t TableGrid::spanning_cell_count() const {
  size_t n = 0;
  for (const auto& row : cells_)
    for (const auto& s : row)
      if (s.anchor && (s.rowspan > 1 || s.colspan > 1)) ++n;
  return n;
}

std::string_view to_string(RowRole role) {
  switch (role) {
    case RowRole::header: return "header";
    case RowRole::data: return "data";
    case RowRole::subtotal: return "subtotal";
    case RowRole::total: return "total";
  }
  return "data";
}

std::optional<RowRole> row_role_from_string(std::string_view s) {
  if (s == "header") return RowRole::header;
  if (s == "data") return RowRole::data;
  if (s == "subtotal") return RowRole::subtotal;
  if (s == "total") return RowRole::total;
  return std::nullopt;
}

RoleKeywordConfig RoleKeywordConfig::from_json_text(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorCode::InvalidArgument, "role keyword config must be a JSON object");
  RoleKeywordConfig cfg;
  auto read = [&](const char* key, std::vector<std::string>& dst) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_array())
      throw Error(ErrorCode::InvalidArgument, std::string("role keywords '") + key + "' must be a list");
    dst.clear();
    for (const auto& v : j.at(key)) dst.push_back(v.get<std::string>());
  };
  read("subtotal", cfg.subtotal);
  read("total", cfg.total);
  return cfg;
}

RoleKeywordConfig RoleKeywordConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

RowRole detect_row_role(const std::vector<std::string>& cells, const RoleKeywordConfig& keywords) {
  std::vector<std::string> folded;
  folded.reserve(cells.size());
  for (const auto& c : cells) folded.push_back(text::fold(c));
  auto any_hit = [&](const std::vector<std::string>& words) {
    for (const auto& w : words) {
      const std::string key = text::fold(w);
      if (key.empty()) continue;
      for (const auto& cell : folded)
        if (text::contains(cell, key)) return true;
    }
    return false;
  };
  if (any_hit(keywords.subtotal)) return RowRole::subtotal;
  if (any_hit(keywords.total)) return RowRole::total;
  return RowRole::data;
}

std::vector<RowRole> detect_row_roles(const TableGrid& grid, const RoleKeywordConfig& keywords) {
  std::vector<RowRole> roles;
  roles.reserve(grid.n_rows());
  for (size_t r = 0; r < grid.n_rows(); ++r) {
    roles.push_back(r < grid.header_row_count() ? RowRole::header
                                                : detect_row_role(grid.row_texts(r), keywords));
  }
  return roles;
}

}  // namespace tablerouter

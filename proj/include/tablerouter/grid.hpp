#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tablerouter {

struct CellPos {
  size_t row = 0;
  size_t col = 0;
  friend bool operator==(const CellPos&, const CellPos&) = default;
};

struct CellSlot {
  std::string text;
  bool anchor = true;
  size_t rowspan = 1;
  size_t colspan = 1;
  std::optional<CellPos> covered_by;

  friend bool operator==(const CellSlot&, const CellSlot&) = default;
};

// Dense cell matrix with merged cells realized as anchor + covered slots.
//
// Row-covered slots (below the anchor, same column) carry the anchor text so
// key columns stay matchable; slots to the right of an anchor stay empty so
// amounts are never double counted.
class TableGrid {
 public:
  TableGrid() = default;

  // A spanning cell to be placed on the grid; rows/cols are the top-left slot.
  struct Anchor {
    size_t row = 0;
    size_t col = 0;
    size_t rowspan = 1;
    size_t colspan = 1;
    std::string text;
  };

  // Builds a grid from explicit anchors. Slots not covered by any anchor
  // become empty singleton anchors. Returns nullopt when spans overlap or
  // leave the bounds.
  static std::optional<TableGrid> from_anchors(size_t n_rows, size_t n_cols,
                                               const std::vector<Anchor>& anchors,
                                               size_t header_row_count);

  size_t n_rows() const { return cells_.size(); }
  size_t n_cols() const { return n_cols_; }
  size_t header_row_count() const { return header_row_count_; }
  void set_header_row_count(size_t n) { header_row_count_ = n; }

  const CellSlot& at(size_t r, size_t c) const { return cells_.at(r).at(c); }
  const std::vector<std::vector<CellSlot>>& rows() const { return cells_; }

  // The anchor position owning slot (r, c).
  CellPos anchor_of(size_t r, size_t c) const;

  // All anchors in row-major order of their top-left slot.
  std::vector<Anchor> anchors() const;

  // Text of each slot of one row, as stored.
  std::vector<std::string> row_texts(size_t r) const;

  // Checks every structural invariant; returns a description of the first
  // violation.
  std::optional<std::string> check_invariants() const;

  // Number of anchors covering more than one slot.
  size_t spanning_cell_count() const;

  friend bool operator==(const TableGrid&, const TableGrid&) = default;

 private:
  std::vector<std::vector<CellSlot>> cells_;
  size_t n_cols_ = 0;
  size_t header_row_count_ = 0;
};

enum class RowRole { header, data, subtotal, total };

std::string_view to_string(RowRole role);
std::optional<RowRole> row_role_from_string(std::string_view s);

// Keyword lists for role detection; compared case- and accent-insensitively
// by substring containment.
struct RoleKeywordConfig {
  std::vector<std::string> subtotal{"sous-total", "sous total", "subtotal"};
  std::vector<std::string> total{"total"};

  static RoleKeywordConfig from_json_file(const std::string& path);
  static RoleKeywordConfig from_json_text(std::string_view json_text);
};

// Header rows first; then subtotal if any cell contains a subtotal keyword,
// else total if any cell contains a total keyword, else data.
std::vector<RowRole> detect_row_roles(const TableGrid& grid,
                                      const RoleKeywordConfig& keywords = {});

RowRole detect_row_role(const std::vector<std::string>& cells,
                        const RoleKeywordConfig& keywords = {});

}  // namespace tablerouter

#include "tablerouter/tsr_metrics.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/text.hpp"
#include "tablerouter/tree_edit.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace tablerouter {

MetricScore teds(std::string_view pred_html, std::string_view gt_html, bool structure_only) {
  const auto gt = build_table_tree(gt_html);
  if (!gt) throw Error(ErrorCode::EmptyGroundTruth, "ground truth holds no table");
  const auto pred = build_table_tree(pred_html);
  if (!pred) return {0.0, std::nullopt, std::nullopt};
  const CostModel model = structure_only ? CostModel::structure : CostModel::content;
  const double d = tree_edit_distance(*pred, *gt, model);
  const double denom = static_cast<double>(std::max(pred->size(), gt->size()));
  return {std::clamp(1.0 - d / denom, 0.0, 1.0), std::nullopt, std::nullopt};
}

std::vector<AdjacencyEdge> adjacency_edges(const TableGrid& grid) {
  struct Key {
    size_t ar, ac, br, bc;
    Direction d;
    auto operator<=>(const Key&) const = default;
  };
  std::set<Key> seen;
  std::vector<AdjacencyEdge> edges;
  auto add = [&](CellPos a, CellPos b, Direction d) {
    if (a == b) return;
    if (!seen.insert({a.row, a.col, b.row, b.col, d}).second) return;
    edges.push_back({text::fold(grid.at(a.row, a.col).text), text::fold(grid.at(b.row, b.col).text), d});
  };
  for (size_t r = 0; r < grid.n_rows(); ++r) {
    for (size_t c = 0; c < grid.n_cols(); ++c) {
      const CellPos a = grid.anchor_of(r, c);
      if (c + 1 < grid.n_cols()) add(a, grid.anchor_of(r, c + 1), Direction::right);
      if (r + 1 < grid.n_rows()) add(a, grid.anchor_of(r + 1, c), Direction::down);
    }
  }
  return edges;
}

MetricScore adjacency_f1(const TableGrid& pred, const TableGrid& gt) {
  std::map<AdjacencyEdge, size_t> p, g;
  for (auto& e : adjacency_edges(pred)) ++p[e];
  for (auto& e : adjacency_edges(gt)) ++g[e];
  size_t np = 0, ng = 0, common = 0;
  for (const auto& [e, k] : p) np += k;
  for (const auto& [e, k] : g) {
    ng += k;
    if (auto it = p.find(e); it != p.end()) common += std::min(k, it->second);
  }
  if (np == 0 && ng == 0) return {1.0, 1.0, 1.0};
  const double precision = np == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(np);
  const double recall = ng == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(ng);
  const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  return {f1, precision, recall};
}

SlotRect slot_rect(const TableGrid& g, size_t r, size_t c) {
  const CellPos a = g.anchor_of(r, c);
  const CellSlot& s = g.at(a.row, a.col);
  const long rr = static_cast<long>(r), cc = static_cast<long>(c);
  const long ar = static_cast<long>(a.row), ac = static_cast<long>(a.col);
  return {ar - rr, ar + static_cast<long>(s.rowspan) - rr, ac - cc, ac + static_cast<long>(s.colspan) - cc};
}

double rect_iou(const SlotRect& a, const SlotRect& b) {
  const long ih = std::max(0L, std::min(a.r1, b.r1) - std::max(a.r0, b.r0));
  const long iw = std::max(0L, std::min(a.c1, b.c1) - std::max(a.c0, b.c0));
  const long inter = ih * iw;
  const long area_a = (a.r1 - a.r0) * (a.c1 - a.c0);
  const long area_b = (b.r1 - b.r0) * (b.c1 - b.c0);
  const long uni = area_a + area_b - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

namespace {

using Matrix = std::vector<std::vector<double>>;
using Pairs = std::vector<std::pair<size_t, size_t>>;

// Weighted monotone alignment (maximum-weight common subsequence).
double align(const Matrix& w, Pairs* pairs) {
  const size_t n = w.size();
  const size_t m = n ? w[0].size() : 0;
  Matrix dp(n + 1, std::vector<double>(m + 1, 0.0));
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      dp[i][j] = std::max({dp[i - 1][j], dp[i][j - 1], dp[i - 1][j - 1] + w[i - 1][j - 1]});
  if (pairs) {
    pairs->clear();
    size_t i = n, j = m;
    while (i > 0 && j > 0) {
      if (dp[i][j] == dp[i - 1][j]) --i;
      else if (dp[i][j] == dp[i][j - 1]) --j;
      else {
        pairs->emplace_back(i - 1, j - 1);
        --i;
        --j;
      }
    }
    std::reverse(pairs->begin(), pairs->end());
  }
  return dp[n][m];
}

struct Topology {
  size_t rows = 0, cols = 0;
  std::vector<std::vector<SlotRect>> rect;

  explicit Topology(const TableGrid& g) : rows(g.n_rows()), cols(g.n_cols()) {
    rect.assign(rows, std::vector<SlotRect>(cols));
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) rect[r][c] = slot_rect(g, r, c);
  }
  Topology transposed() const {
    Topology t = *this;
    std::swap(t.rows, t.cols);
    t.rect.assign(t.rows, std::vector<SlotRect>(t.cols));
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) {
        const SlotRect& s = rect[r][c];
        t.rect[c][r] = {s.c0, s.c1, s.r0, s.r1};
      }
    return t;
  }
};

double sim(const Topology& a, const Topology& b, size_t i, size_t j, size_t k, size_t l) {
  return rect_iou(a.rect[i][j], b.rect[k][l]);
}

double score_of(const Topology& a, const Topology& b, const Pairs& rows, const Pairs& cols) {
  double s = 0;
  for (auto [i, k] : rows)
    for (auto [j, l] : cols) s += sim(a, b, i, j, k, l);
  return s;
}

// Rows aligned with per-pair optimal column alignments, then alternating
// refinement of columns given rows and rows given columns.
double factored(const Topology& a, const Topology& b) {
  Matrix row_w(a.rows, std::vector<double>(b.rows, 0.0));
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t k = 0; k < b.rows; ++k) {
      Matrix w(a.cols, std::vector<double>(b.cols, 0.0));
      for (size_t j = 0; j < a.cols; ++j)
        for (size_t l = 0; l < b.cols; ++l) w[j][l] = sim(a, b, i, j, k, l);
      row_w[i][k] = align(w, nullptr);
    }
  Pairs rows, cols;
  align(row_w, &rows);

  double best = 0;
  for (int pass = 0; pass < 3; ++pass) {
    Matrix col_w(a.cols, std::vector<double>(b.cols, 0.0));
    for (size_t j = 0; j < a.cols; ++j)
      for (size_t l = 0; l < b.cols; ++l)
        for (auto [i, k] : rows) col_w[j][l] += sim(a, b, i, j, k, l);
    align(col_w, &cols);

    Matrix rw(a.rows, std::vector<double>(b.rows, 0.0));
    for (size_t i = 0; i < a.rows; ++i)
      for (size_t k = 0; k < b.rows; ++k)
        for (auto [j, l] : cols) rw[i][k] += sim(a, b, i, j, k, l);
    align(rw, &rows);

    const double s = score_of(a, b, rows, cols);
    if (s <= best) break;
    best = s;
  }
  return best;
}

}  // namespace

MetricScore grits_top(const TableGrid& pred, const TableGrid& gt) {
  const size_t na = pred.n_rows() * pred.n_cols();
  const size_t nb = gt.n_rows() * gt.n_cols();
  if (na == 0 && nb == 0) return {1.0, std::nullopt, std::nullopt};
  if (na == 0 || nb == 0) return {0.0, std::nullopt, std::nullopt};
  const Topology a(pred), b(gt);
  const Topology at = a.transposed(), bt = b.transposed();
  // Both factorization orders and both argument orders; each is a feasible
  // alignment, so the maximum stays a lower bound of the exact optimum.
  const double s = std::max({factored(a, b), factored(b, a), factored(at, bt), factored(bt, at)});
  const double v = 2.0 * s / static_cast<double>(na + nb);
  return {std::clamp(v, 0.0, 1.0), std::nullopt, std::nullopt};
}

}  // namespace tablerouter

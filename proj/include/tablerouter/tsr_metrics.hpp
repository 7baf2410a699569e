#pragma once

#include "tablerouter/grid.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tablerouter {

struct MetricScore {
  double value = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
};

// 1 - TED / max(|T_pred|, |T_gt|). A prediction without a table scores 0.
// Throws Error(EmptyGroundTruth) when the reference holds no table.
MetricScore teds(std::string_view pred_html, std::string_view gt_html, bool structure_only);

enum class Direction { right, down };

struct AdjacencyEdge {
  std::string from;
  std::string to;
  Direction direction = Direction::right;
  friend auto operator<=>(const AdjacencyEdge&, const AdjacencyEdge&) = default;
};

// One edge per pair of distinct adjacent anchors, keyed by folded anchor text.
std::vector<AdjacencyEdge> adjacency_edges(const TableGrid& grid);

MetricScore adjacency_f1(const TableGrid& pred, const TableGrid& gt);

// Anchor rectangle of a slot relative to the slot: rows [r0, r1), cols [c0, c1).
struct SlotRect {
  long r0 = 0, r1 = 1, c0 = 0, c1 = 1;
};

SlotRect slot_rect(const TableGrid& g, size_t r, size_t c);
double rect_iou(const SlotRect& a, const SlotRect& b);

// Topology similarity 2*S/(|A|+|B|) with S found by the factored row/column
// alignment, refined for at most three passes.
MetricScore grits_top(const TableGrid& pred, const TableGrid& gt);

}  // namespace tablerouter

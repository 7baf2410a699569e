#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tablerouter {

struct TreeNode {
  std::string tag;
  unsigned colspan = 1;
  unsigned rowspan = 1;
  std::string text;  // td only, whitespace-collapsed
  std::vector<TreeNode> children;

  size_t size() const;
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Ordered tree of the table markup (table/thead/tbody/tr/td). Input is
// sanitized first; absent when it holds no table.
std::optional<TreeNode> build_table_tree(std::string_view html);

enum class CostModel { content, structure };

// Substitution cost as an exact fraction num/den.
struct LabelCost {
  size_t num = 0;
  size_t den = 1;
};

// Structural mismatch (tag or spans) costs 1; matching td nodes cost the
// normalized character edit distance of their texts under the content model.
LabelCost relabel_cost(const TreeNode& a, const TreeNode& b, CostModel model);

// Levenshtein distance over code points.
size_t levenshtein(std::u32string_view a, std::u32string_view b);

namespace detail {

struct Flat {
  std::vector<const TreeNode*> nodes;  // postorder
  std::vector<size_t> lml;             // leftmost leaf descendant, postorder index
  std::vector<size_t> keyroots;
};

Flat flatten(const TreeNode* root);

}  // namespace detail

// Zhang-Shasha ordered tree edit distance with unit insert/delete. Num is the
// arithmetic type (double, or an exact rational for verification).
template <class Num>
Num tree_edit_distance_as(const TreeNode* a, const TreeNode* b, CostModel model,
                          const std::function<Num(const LabelCost&)>& to_num) {
  const detail::Flat fa = detail::flatten(a);
  const detail::Flat fb = detail::flatten(b);
  const size_t n = fa.nodes.size();
  const size_t m = fb.nodes.size();
  if (n == 0) return Num(static_cast<long long>(m));
  if (m == 0) return Num(static_cast<long long>(n));

  std::vector<std::vector<Num>> td(n, std::vector<Num>(m, Num(0)));
  std::vector<std::vector<Num>> fd(n + 1, std::vector<Num>(m + 1, Num(0)));
  const Num one(1);

  for (size_t ki : fa.keyroots) {
    for (size_t kj : fb.keyroots) {
      const size_t li = fa.lml[ki];
      const size_t lj = fb.lml[kj];
      // fd indices are offset by one: fd[x - li + 1][y - lj + 1] covers forests
      // li..x and lj..y; row/column 0 are the empty forests.
      const size_t rows = ki - li + 2;
      const size_t cols = kj - lj + 2;
      fd[0][0] = Num(0);
      for (size_t x = 1; x < rows; ++x) fd[x][0] = fd[x - 1][0] + one;
      for (size_t y = 1; y < cols; ++y) fd[0][y] = fd[0][y - 1] + one;
      for (size_t x = 1; x < rows; ++x) {
        for (size_t y = 1; y < cols; ++y) {
          const size_t i = li + x - 1;
          const size_t j = lj + y - 1;
          Num del = fd[x - 1][y] + one;
          Num ins = fd[x][y - 1] + one;
          Num best = std::min(del, ins);
          if (fa.lml[i] == li && fb.lml[j] == lj) {
            Num sub = fd[x - 1][y - 1] + to_num(relabel_cost(*fa.nodes[i], *fb.nodes[j], model));
            best = std::min(best, sub);
            fd[x][y] = best;
            td[i][j] = best;
          } else {
            Num sub = fd[fa.lml[i] - li][fb.lml[j] - lj] + td[i][j];
            fd[x][y] = std::min(best, sub);
          }
        }
      }
    }
  }
  return td[n - 1][m - 1];
}

double tree_edit_distance(const TreeNode& a, const TreeNode& b, CostModel model);

}  // namespace tablerouter

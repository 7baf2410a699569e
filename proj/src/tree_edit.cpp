#include "tablerouter/tree_edit.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/html.hpp"
#include "tablerouter/text.hpp"

namespace tablerouter {

size_t TreeNode::size() const {
  size_t n = 1;
  for (const auto& c : children) n += c.size();
  return n;
}

namespace {

int depth_of(std::string_view tag) {
  if (tag == "table") return 0;
  if (tag == "thead" || tag == "tbody") return 1;
  if (tag == "tr") return 2;
  if (tag == "td") return 3;
  return -1;
}

}  // namespace

std::optional<TreeNode> build_table_tree(std::string_view html) {
  std::string clean;
  try {
    clean = sanitize_html(html);
  } catch (const Error&) {
    return std::nullopt;
  }
  TreeNode root;
  std::vector<TreeNode*> stack;
  std::string pending;
  auto flush_text = [&] {
    if (!stack.empty() && stack.back()->tag == "td") stack.back()->text += pending;
    pending.clear();
  };
  for (const auto& tok : tokenize_html(clean)) {
    if (tok.kind == HtmlToken::Kind::text) {
      pending += decode_entities(tok.text);
      continue;
    }
    flush_text();
    const int depth = depth_of(tok.name);
    if (depth < 0) continue;
    if (tok.kind == HtmlToken::Kind::open) {
      if (depth == 0) {
        if (!stack.empty()) break;  // nested or second table
        root.tag = "table";
        stack.push_back(&root);
        continue;
      }
      if (stack.empty()) continue;
      // Close open elements at the same or deeper level (implicit end tags).
      while (stack.size() > 1 && depth_of(stack.back()->tag) >= depth) stack.pop_back();
      TreeNode node;
      node.tag = tok.name;
      if (tok.name == "td") {
        node.colspan = static_cast<unsigned>(tok.colspan);
        node.rowspan = static_cast<unsigned>(tok.rowspan);
      }
      stack.back()->children.push_back(std::move(node));
      stack.push_back(&stack.back()->children.back());
    } else {
      for (size_t i = stack.size(); i-- > 0;) {
        if (stack[i]->tag == tok.name) {
          stack.resize(i);
          break;
        }
      }
      if (stack.empty() && depth == 0) break;
    }
  }
  if (root.tag.empty()) return std::nullopt;
  std::vector<TreeNode*> todo{&root};
  while (!todo.empty()) {
    TreeNode* n = todo.back();
    todo.pop_back();
    if (n->tag == "td") n->text = text::collapse_whitespace(n->text);
    for (auto& c : n->children) todo.push_back(&c);
  }
  return root;
}

size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

LabelCost relabel_cost(const TreeNode& a, const TreeNode& b, CostModel model) {
  if (a.tag != b.tag || a.colspan != b.colspan || a.rowspan != b.rowspan) return {1, 1};
  if (a.tag != "td" || model == CostModel::structure) return {0, 1};
  const std::u32string ta = text::to_u32(a.text);
  const std::u32string tb = text::to_u32(b.text);
  const size_t den = std::max(ta.size(), tb.size());
  if (den == 0) return {0, 1};
  return {levenshtein(ta, tb), den};
}

namespace detail {

Flat flatten(const TreeNode* root) {
  Flat f;
  if (!root) return f;
  // Iterative postorder keeping each node's leftmost leaf.
  struct Frame {
    const TreeNode* node;
    size_t next_child;
    size_t first_index;
  };
  std::vector<Frame> stack{{root, 0, SIZE_MAX}};
  while (!stack.empty()) {
    Frame& fr = stack.back();
    if (fr.next_child < fr.node->children.size()) {
      const TreeNode* child = &fr.node->children[fr.next_child++];
      stack.push_back({child, 0, SIZE_MAX});
      continue;
    }
    const size_t idx = f.nodes.size();
    f.nodes.push_back(fr.node);
    const size_t lml = fr.node->children.empty() ? idx : fr.first_index;
    f.lml.push_back(lml);
    stack.pop_back();
    if (!stack.empty() && stack.back().first_index == SIZE_MAX) stack.back().first_index = lml;
  }
  // Keyroots: nodes whose leftmost leaf differs from their parent's, i.e. the
  // highest node for each distinct lml value.
  std::vector<size_t> highest(f.nodes.size(), SIZE_MAX);
  for (size_t i = 0; i < f.nodes.size(); ++i) highest[f.lml[i]] = i;
  for (size_t i = 0; i < f.nodes.size(); ++i)
    if (highest[i] != SIZE_MAX) f.keyroots.push_back(highest[i]);
  std::sort(f.keyroots.begin(), f.keyroots.end());
  return f;
}

}  // namespace detail

double tree_edit_distance(const TreeNode& a, const TreeNode& b, CostModel model) {
  return tree_edit_distance_as<double>(&a, &b, model, [](const LabelCost& c) {
    return static_cast<double>(c.num) / static_cast<double>(c.den);
  });
}

}  // namespace tablerouter

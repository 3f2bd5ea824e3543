#include "clipita/cattree.hpp"

#include <algorithm>

namespace clipita {
namespace {

[[noreturn]] void unknown(std::string_view id) {
  throw ValidationError("unknown category_id " + std::string(id));
}

}  // namespace

std::string_view to_string(EvalSetting setting) {
  switch (setting) {
    case EvalSetting::AllCategories:
      return "all-categories";
    case EvalSetting::MostGeneral:
      return "most-general";
    case EvalSetting::MostSpecific:
      return "most-specific";
  }
  return "?";
}

EvalSetting parse_eval_setting(std::string_view text) {
  for (auto s : kAllSettings) {
    if (to_string(s) == text) {
      return s;
    }
  }
  throw ArgumentError("unknown evaluation setting \"" + std::string(text) +
                      "\" (expected all-categories, most-general or most-specific)");
}

bool CategoryTree::contains(std::string_view id) const {
  return nodes_.find(id) != nodes_.end();
}

const CategoryNode& CategoryTree::node(std::string_view id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    unknown(id);
  }
  return it->second;
}

const std::string& CategoryTree::root_of(std::string_view id) const {
  auto it = root_of_.find(id);
  if (it == root_of_.end()) {
    unknown(id);
  }
  return it->second;
}

const std::vector<std::string>& CategoryTree::children(std::string_view id) const {
  static const std::vector<std::string> kNone;
  if (!contains(id)) {
    unknown(id);
  }
  auto it = children_.find(id);
  return it == children_.end() ? kNone : it->second;
}

CategoryTree build_tree(std::vector<CategoryRecord> records) {
  if (records.empty()) {
    throw ValidationError("category list is empty");
  }
  CategoryTree tree;
  for (const auto& r : records) {
    if (r.category_id.empty()) {
      throw ValidationError("category with empty id");
    }
    CategoryNode n{r.category_id, r.name, r.parent_id, 0};
    if (!tree.nodes_.emplace(r.category_id, std::move(n)).second) {
      throw ValidationError("duplicate category_id " + r.category_id);
    }
  }
  for (const auto& [id, n] : tree.nodes_) {
    if (!n.parent_id) {
      tree.roots_.insert(id);
      continue;
    }
    if (!tree.contains(*n.parent_id)) {
      throw ValidationError("category " + id + " has missing parent " + *n.parent_id);
    }
    tree.children_[*n.parent_id].push_back(id);
  }
  for (auto& [_, kids] : tree.children_) {
    std::sort(kids.begin(), kids.end());
  }

  // Breadth-first from the roots assigns depths; anything left unvisited sits
  // on a cycle (or hangs below one).
  std::vector<std::string> frontier(tree.roots_.begin(), tree.roots_.end());
  for (const auto& r : frontier) {
    tree.nodes_.find(r)->second.depth = 1;
    tree.root_of_[r] = r;
  }
  std::size_t visited = frontier.size();
  int depth = 1;
  while (!frontier.empty()) {
    tree.max_depth_ = depth;
    std::vector<std::string> next;
    for (const auto& id : frontier) {
      auto kids = tree.children_.find(id);
      if (kids == tree.children_.end()) {
        continue;
      }
      const std::string root = tree.root_of_.find(id)->second;
      for (const auto& k : kids->second) {
        tree.nodes_.find(k)->second.depth = depth + 1;
        tree.root_of_[k] = root;
        next.push_back(k);
      }
    }
    visited += next.size();
    if (!next.empty() && depth + 1 > kMaxTreeDepth) {
      throw ValidationError("category " + next.front() + " has depth " +
                            std::to_string(depth + 1) + " > " +
                            std::to_string(kMaxTreeDepth));
    }
    frontier = std::move(next);
    ++depth;
  }
  if (visited != tree.nodes_.size()) {
    for (const auto& [id, n] : tree.nodes_) {
      if (n.depth == 0) {
        throw ValidationError("cycle in category tree involving " + id);
      }
    }
  }
  tree.records_ = std::move(records);
  return tree;
}

std::vector<std::string> subtree_path(const CategoryTree& tree, std::string_view leaf) {
  std::vector<std::string> path;
  const CategoryNode* n = &tree.node(leaf);
  path.reserve(static_cast<std::size_t>(n->depth));
  while (true) {
    path.push_back(n->category_id);
    if (!n->parent_id) {
      break;
    }
    n = &tree.node(*n->parent_id);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string sample_query_category(const CategoryTree& tree, std::string_view leaf,
                                  EvalSetting setting, Rng& rng) {
  switch (setting) {
    case EvalSetting::MostGeneral:
      return tree.root_of(leaf);
    case EvalSetting::MostSpecific:
      return tree.node(leaf).category_id;
    case EvalSetting::AllCategories: {
      auto path = subtree_path(tree, leaf);
      return path[static_cast<std::size_t>(rng.below(path.size()))];
    }
  }
  throw ArgumentError("invalid evaluation setting");
}

std::set<std::string> relevant_products(const ProductCatalog& catalog,
                                        const CategoryTree& tree, std::string_view c) {
  const CategoryNode& target = tree.node(c);
  std::set<std::string> out;
  for (const auto& p : catalog.products()) {
    // Walk up from the leaf only as far as the target's depth.
    const CategoryNode* n = &tree.node(p.leaf_category_id);
    while (n->depth > target.depth) {
      n = &tree.node(*n->parent_id);
    }
    if (n->category_id == target.category_id) {
      out.insert(p.product_id);
    }
  }
  return out;
}

TreeDistance tree_distance(const CategoryTree& tree, std::string_view target,
                           std::string_view predicted) {
  const CategoryNode& t = tree.node(target);
  const CategoryNode& p = tree.node(predicted);
  if (t.category_id == p.category_id) {
    throw ArgumentError("tree_distance requires target != predicted");
  }
  TreeDistance out;
  out.same_tree = tree.root_of(target) == tree.root_of(predicted);
  if (out.same_tree) {
    out.d = p.depth - t.depth;
  }
  return out;
}

void validate_catalog(const ProductCatalog& catalog, const CategoryTree& tree) {
  for (const auto& p : catalog.products()) {
    if (!tree.contains(p.leaf_category_id)) {
      throw ValidationError("product " + p.product_id + " references unknown category " +
                            p.leaf_category_id);
    }
  }
}

}  // namespace clipita

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clipita/common.hpp"
#include "clipita/dataio.hpp"

namespace clipita {

inline constexpr int kMaxTreeDepth = 9;

struct CategoryNode {
  std::string category_id;
  std::string name;
  std::optional<std::string> parent_id;
  int depth = 1;  // roots are depth 1
};

/// Granularity at which a product's category chain is turned into a query.
enum class EvalSetting { AllCategories, MostGeneral, MostSpecific };

inline constexpr EvalSetting kAllSettings[] = {
    EvalSetting::AllCategories, EvalSetting::MostGeneral, EvalSetting::MostSpecific};

/// "all-categories", "most-general", "most-specific".
std::string_view to_string(EvalSetting setting);
EvalSetting parse_eval_setting(std::string_view text);

struct TreeDistance {
  bool same_tree = false;
  std::optional<int> d;  // depth(predicted) - depth(target), set iff same_tree
};

/// Immutable, validated category forest.
class CategoryTree {
 public:
  bool contains(std::string_view id) const;
  const CategoryNode& node(std::string_view id) const;
  int depth(std::string_view id) const { return node(id).depth; }
  const std::string& root_of(std::string_view id) const;

  /// Children in ascending id order; empty for leaves.
  const std::vector<std::string>& children(std::string_view id) const;
  const std::set<std::string>& roots() const noexcept { return roots_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  int max_depth() const noexcept { return max_depth_; }

  /// Records in the order they were given to build_tree.
  const std::vector<CategoryRecord>& records() const noexcept { return records_; }

 private:
  friend CategoryTree build_tree(std::vector<CategoryRecord> records);

  std::map<std::string, CategoryNode, std::less<>> nodes_;
  std::map<std::string, std::vector<std::string>, std::less<>> children_;
  std::map<std::string, std::string, std::less<>> root_of_;
  std::set<std::string> roots_;
  std::vector<CategoryRecord> records_;
  int max_depth_ = 0;
};

/// Validates ids, parents, acyclicity and depth <= 9, then computes depths.
CategoryTree build_tree(std::vector<CategoryRecord> records);

/// Root-to-node chain, inclusive. Length equals depth(leaf).
std::vector<std::string> subtree_path(const CategoryTree& tree, std::string_view leaf);

/// MostGeneral -> root, MostSpecific -> leaf, AllCategories -> uniform over
/// the chain (one rng draw; the other settings do not touch rng).
std::string sample_query_category(const CategoryTree& tree, std::string_view leaf,
                                  EvalSetting setting, Rng& rng);

/// Products whose root-to-leaf chain contains c.
std::set<std::string> relevant_products(const ProductCatalog& catalog,
                                        const CategoryTree& tree, std::string_view c);

TreeDistance tree_distance(const CategoryTree& tree, std::string_view target,
                           std::string_view predicted);

/// Every product's leaf_category_id must resolve in the tree.
void validate_catalog(const ProductCatalog& catalog, const CategoryTree& tree);

}  // namespace clipita

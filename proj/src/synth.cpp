#include "clipita/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <unordered_set>

#include "clipita/common.hpp"

namespace clipita {
namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::string_view kAttributeKeys[] = {"color", "material", "size",   "style",
                                               "brand", "pattern",  "fit",    "finish"};
constexpr std::size_t kFillerWords = 300;
constexpr std::size_t kGlobalAttributes = 200;
constexpr std::size_t kLeafAttributePool = 4;
constexpr double kLeafAttributeShare = 0.75;
constexpr double kReuseInternal = 0.6;
// Attribute counts are 1 + Binomial(23, p), giving 1..24 with mean ~5.87.
constexpr int kExtraAttributeTrials = 23;
constexpr double kExtraAttributeP = 4.87 / 23.0;
constexpr double kTargetMeanDepth = 4.63;

void normalize_in_place(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  if (n == 0.0) {
    throw Error("cannot normalize a zero vector");
  }
  for (double& x : v) x /= n;
}

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  normalize_in_place(v);
  return v;
}

int binomial(Rng& rng, int trials, double p) {
  int k = 0;
  for (int i = 0; i < trials; ++i) {
    if (rng.uniform() < p) ++k;
  }
  return k;
}

// Three-syllable pseudo-words, unique across everything one generator emits.
class WordSource {
 public:
  explicit WordSource(Rng rng) : rng_(rng) {}

  std::string next() {
    while (true) {
      std::string w;
      for (int s = 0; s < 3; ++s) {
        w.push_back(kConsonants[rng_.below(kConsonants.size())]);
        w.push_back(kVowels[rng_.below(kVowels.size())]);
      }
      if (used_.insert(w).second) {
        return w;
      }
    }
  }

 private:
  Rng rng_;
  std::unordered_set<std::string> used_;
};

std::string make_id(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, n);
  return buf;
}

struct GenNode {
  std::size_t parent = 0;
  bool has_parent = false;
  int depth = 1;
  bool terminal = false;
  std::vector<std::size_t> children;
};

void check_params(const SynthParams& p) {
  if (p.n_products < 1) throw ArgumentError("n_products must be >= 1");
  if (p.n_trees < 1) throw ArgumentError("n_trees must be >= 1");
  if (p.max_depth < 2 || p.max_depth > kMaxTreeDepth)
    throw ArgumentError("max_depth must be in [2, 9]");
  if (!(p.noise_sigma >= 0.0) || !std::isfinite(p.noise_sigma))
    throw ArgumentError("noise_sigma must be finite and >= 0");
  if (p.image_dim < 2 || p.text_dim < 2) throw ArgumentError("dims must be >= 2");
  if (!(p.products_per_leaf > 0.0)) throw ArgumentError("products_per_leaf must be > 0");
}

}  // namespace

std::vector<double> synth_text_embed(std::string_view text, std::size_t dim,
                                     std::uint64_t seed) {
  if (dim < 2) {
    throw ArgumentError("synth_text_embed requires dim >= 2");
  }
  const auto tokens = tokenize(text);
  if (tokens.empty()) {
    throw ArgumentError("text \"" + std::string(text) + "\" has no tokens");
  }
  std::vector<double> sum(dim, 0.0);
  for (const auto& t : tokens) {
    Rng rng(hash64(t, seed));
    const auto v = random_unit(rng, dim);
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
  }
  for (double& x : sum) x /= static_cast<double>(tokens.size());
  normalize_in_place(sum);
  return sum;
}

SynthDataset synth_catalog(const SynthParams& params) {
  check_params(params);
  const Rng base(params.seed);
  Rng tree_rng = base.fork(1);
  WordSource words(base.fork(2));
  Rng centroid_rng = base.fork(3);
  Rng product_rng = base.fork(4);
  Rng noise_rng = base.fork(5);

  // Forest structure.
  const auto n_leaves = std::max<std::size_t>(
      params.n_trees,
      static_cast<std::size_t>(std::ceil(static_cast<double>(params.n_products) /
                                         params.products_per_leaf)));
  const int span = params.max_depth - 2;
  const double depth_p =
      span == 0 ? 0.0 : std::min(0.5, (kTargetMeanDepth - 2.0) / static_cast<double>(span));

  std::vector<GenNode> nodes;
  for (std::size_t r = 0; r < params.n_trees; ++r) {
    nodes.push_back(GenNode{});
  }
  auto add_child = [&nodes](std::size_t parent, bool terminal) {
    GenNode n;
    n.parent = parent;
    n.has_parent = true;
    n.depth = nodes[parent].depth + 1;
    n.terminal = terminal;
    nodes.push_back(n);
    const std::size_t id = nodes.size() - 1;
    nodes[parent].children.push_back(id);
    return id;
  };
  std::vector<std::size_t> leaves;
  for (std::size_t l = 0; l < n_leaves; ++l) {
    std::size_t cur = l < params.n_trees ? l : tree_rng.below(params.n_trees);
    const int depth = 2 + binomial(tree_rng, span, depth_p);
    for (int level = 2; level < depth; ++level) {
      std::vector<std::size_t> internal;
      for (auto c : nodes[cur].children) {
        if (!nodes[c].terminal) internal.push_back(c);
      }
      if (!internal.empty() && tree_rng.uniform() < kReuseInternal) {
        cur = internal[tree_rng.below(internal.size())];
      } else {
        cur = add_child(cur, false);
      }
    }
    leaves.push_back(add_child(cur, true));
  }

  SynthDataset out;
  std::vector<std::string> ids(nodes.size());
  std::vector<std::string> names(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    ids[i] = make_id('c', i);
    names[i] = words.next();
    CategoryRecord rec{ids[i], names[i], std::nullopt};
    if (nodes[i].has_parent) rec.parent_id = ids[nodes[i].parent];
    out.categories.push_back(std::move(rec));
  }
  out.tree = build_tree(out.categories);

  // Vocabularies.
  std::vector<std::string> filler(kFillerWords);
  for (auto& w : filler) w = words.next();
  auto make_attribute = [&](Rng& rng) {
    std::string a(kAttributeKeys[rng.below(std::size(kAttributeKeys))]);
    a += ": ";
    a += words.next();
    return a;
  };
  Rng attr_rng = base.fork(6);
  std::vector<std::string> global_attrs(kGlobalAttributes);
  for (auto& a : global_attrs) a = make_attribute(attr_rng);
  std::vector<std::vector<std::string>> leaf_attrs(leaves.size());
  for (auto& pool : leaf_attrs) {
    pool.resize(kLeafAttributePool);
    for (auto& a : pool) a = make_attribute(attr_rng);
  }

  // Leaf centroids.
  std::vector<std::vector<double>> centroids;
  std::vector<std::string> centroid_ids;
  std::vector<double> centroid_data;
  for (auto leaf : leaves) {
    centroids.push_back(random_unit(centroid_rng, params.image_dim));
    centroid_ids.push_back(ids[leaf]);
    centroid_data.insert(centroid_data.end(), centroids.back().begin(),
                         centroids.back().end());
  }
  out.centroids = EmbeddingMatrix(params.image_dim, centroid_ids, std::move(centroid_data));

  // Products.
  std::vector<ProductRecord> products;
  std::vector<std::string> image_ids;
  std::vector<double> image_data;
  for (std::size_t i = 0; i < params.n_products; ++i) {
    const std::size_t leaf_slot = i < leaves.size() ? i : product_rng.below(leaves.size());
    const std::size_t leaf = leaves[leaf_slot];

    ProductRecord p;
    p.product_id = make_id('p', i);
    p.image_id = make_id('i', i);
    p.leaf_category_id = ids[leaf];

    std::vector<std::string> title_words;
    const std::size_t n_fill = (params.title_informative ? 2 : 3) + product_rng.below(3);
    for (std::size_t w = 0; w < n_fill; ++w) {
      title_words.push_back(filler[product_rng.below(filler.size())]);
    }
    if (params.title_informative) {
      const auto pos = product_rng.below(title_words.size() + 1);
      title_words.insert(title_words.begin() + static_cast<std::ptrdiff_t>(pos), names[leaf]);
    }
    for (std::size_t w = 0; w < title_words.size(); ++w) {
      if (w) p.title += ' ';
      p.title += title_words[w];
    }

    const int n_attrs = 1 + binomial(product_rng, kExtraAttributeTrials, kExtraAttributeP);
    for (int a = 0; a < n_attrs; ++a) {
      const bool from_leaf = params.attr_informative &&
                             (a == 0 || product_rng.uniform() < kLeafAttributeShare);
      if (from_leaf) {
        const auto& pool = leaf_attrs[leaf_slot];
        p.attributes.push_back(pool[product_rng.below(pool.size())]);
      } else {
        p.attributes.push_back(global_attrs[product_rng.below(global_attrs.size())]);
      }
    }

    std::vector<double> img = centroids[leaf_slot];
    if (params.noise_sigma > 0.0) {
      for (double& x : img) x += params.noise_sigma * noise_rng.normal();
      normalize_in_place(img);
    }
    image_ids.push_back(p.image_id);
    image_data.insert(image_data.end(), img.begin(), img.end());
    products.push_back(std::move(p));
  }
  out.catalog = ProductCatalog(std::move(products));
  out.images = EmbeddingMatrix(params.image_dim, std::move(image_ids), std::move(image_data));
  return out;
}

EmbeddingMatrix synth_text_embeddings(const ProductCatalog& catalog,
                                      const std::vector<CategoryRecord>& categories,
                                      std::size_t dim, std::uint64_t seed) {
  std::set<std::string> texts;
  for (const auto& c : categories) texts.insert(c.name);
  for (const auto& p : catalog.products()) {
    texts.insert(p.title);
    texts.insert(p.attributes.begin(), p.attributes.end());
  }
  std::vector<std::string> ids;
  std::vector<double> data;
  ids.reserve(texts.size());
  data.reserve(texts.size() * dim);
  for (const auto& t : texts) {
    const auto v = synth_text_embed(t, dim, seed);
    ids.push_back(t);
    data.insert(data.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix(dim, std::move(ids), std::move(data));
}

}  // namespace clipita

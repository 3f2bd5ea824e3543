#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "clipita/cattree.hpp"
#include "clipita/dataio.hpp"

namespace clipita {

/// Deterministic stand-in for a frozen sentence encoder: the normalized mean
/// of per-token unit vectors, token vector i drawn from Rng(hash64(token, seed)).
/// Throws ArgumentError for dim < 2 or text without tokens.
std::vector<double> synth_text_embed(std::string_view text, std::size_t dim,
                                     std::uint64_t seed);

struct SynthParams {
  std::size_t n_products = 2000;
  std::size_t n_trees = 5;
  int max_depth = 9;
  std::size_t image_dim = 64;
  std::size_t text_dim = 96;
  double noise_sigma = 0.05;
  bool attr_informative = true;
  bool title_informative = true;
  std::uint64_t seed = 7;
  /// Mean products per leaf category; sets the number of leaves.
  double products_per_leaf = 10.0;
};

struct SynthDataset {
  std::vector<CategoryRecord> categories;
  CategoryTree tree;
  ProductCatalog catalog;
  /// Keyed by image_id.
  EmbeddingMatrix images;
  /// Keyed by leaf category id.
  EmbeddingMatrix centroids;
};

/// Planted-structure catalog: a forest with chain-per-product subtrees, one
/// unit centroid per leaf, images at normalize(centroid + N(0, sigma^2 I)).
/// Informative titles carry the leaf's name; informative attributes are drawn
/// mostly from a leaf-specific pool. Otherwise both come from shared noise
/// vocabularies.
SynthDataset synth_catalog(const SynthParams& params);

/// Text embeddings for every distinct category name, title and attribute
/// string, keyed by the text itself and sorted by it.
EmbeddingMatrix synth_text_embeddings(const ProductCatalog& catalog,
                                      const std::vector<CategoryRecord>& categories,
                                      std::size_t dim, std::uint64_t seed);

}  // namespace clipita

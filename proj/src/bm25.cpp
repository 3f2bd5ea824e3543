#include "clipita/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "clipita/common.hpp"

namespace clipita {

Bm25Index build_bm25(const std::vector<std::pair<std::string, std::string>>& docs, double k1,
                     double b) {
  if (docs.empty()) throw ArgumentError("build_bm25: empty corpus");
  if (!(k1 > 0.0)) throw ArgumentError("build_bm25: k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ArgumentError("build_bm25: b must lie in [0, 1]");
  Bm25Index index;
  index.k1_ = k1;
  index.b_ = b;
  std::size_t total_len = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto tokens = tokenize(docs[d].second);
    std::map<std::string, std::size_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) index.postings_[term].push_back({d, count});
    index.doc_ids_.push_back(docs[d].first);
    index.doc_lengths_.push_back(tokens.size());
    total_len += tokens.size();
  }
  index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(docs.size());
  return index;
}

const std::vector<Posting>& Bm25Index::postings(std::string_view term) const {
  static const std::vector<Posting> kNone;
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? kNone : it->second;
}

std::size_t Bm25Index::term_frequency(std::string_view term, std::size_t doc) const {
  const auto& list = postings(term);
  auto it = std::lower_bound(list.begin(), list.end(), doc,
                             [](const Posting& p, std::size_t d) { return p.doc < d; });
  return it != list.end() && it->doc == doc ? it->tf : 0;
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(n_docs());
  const double df = static_cast<double>(postings(term).size());
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::vector<double> Bm25Index::score_all(std::string_view query) const {
  std::vector<double> scores(n_docs(), 0.0);
  // Every query token contributes, so repeated terms count once per occurrence.
  for (const auto& term : tokenize(query)) {
    const auto& list = postings(term);
    if (list.empty()) continue;
    const double w = idf(term);
    for (const auto& p : list) {
      const double tf = static_cast<double>(p.tf);
      const double len = static_cast<double>(doc_lengths_[p.doc]);
      // avgdl is 0 only when every document is empty, and then no postings exist.
      const double norm = k1_ * (1.0 - b_ + b_ * len / avgdl_);
      scores[p.doc] += w * tf * (k1_ + 1.0) / (tf + norm);
    }
  }
  return scores;
}

RankedList bm25_top_k(const Bm25Index& index, std::string_view query, std::size_t k) {
  if (tokenize(query).empty()) {
    throw ArgumentError("bm25_top_k: query \"" + std::string(query) + "\" has no terms");
  }
  const auto scores = index.score_all(query);
  RankedList all;
  all.reserve(scores.size());
  for (std::size_t d = 0; d < scores.size(); ++d) all.push_back({index.doc_ids()[d], scores[d]});
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    ranks_before);
  all.resize(keep);
  return all;
}

}  // namespace clipita

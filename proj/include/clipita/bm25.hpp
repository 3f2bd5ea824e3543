#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clipita/retrieval.hpp"

namespace clipita {

struct Posting {
  std::size_t doc = 0;  // index into Bm25Index::doc_ids()
  std::size_t tf = 0;
};

/// Okapi BM25 over tokenized documents with the non-negative idf
/// ln((N - df + 0.5) / (df + 0.5) + 1).
class Bm25Index {
 public:
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const std::vector<std::size_t>& doc_lengths() const noexcept { return doc_lengths_; }
  std::size_t n_docs() const noexcept { return doc_ids_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  double k1() const noexcept { return k1_; }
  double b() const noexcept { return b_; }

  /// Postings for a (lowercased) term; empty when absent.
  const std::vector<Posting>& postings(std::string_view term) const;
  std::size_t term_frequency(std::string_view term, std::size_t doc) const;
  double idf(std::string_view term) const;

  /// BM25 score of every document for a bag-of-words query.
  std::vector<double> score_all(std::string_view query) const;

 private:
  friend Bm25Index build_bm25(const std::vector<std::pair<std::string, std::string>>& docs,
                              double k1, double b);
  std::vector<std::string> doc_ids_;
  std::vector<std::size_t> doc_lengths_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avgdl_ = 0.0;
  double k1_ = 1.2;
  double b_ = 0.75;
};

/// docs are (doc_id, text) pairs. Throws ArgumentError for an empty corpus or
/// parameters outside k1 > 0, 0 <= b <= 1.
Bm25Index build_bm25(const std::vector<std::pair<std::string, std::string>>& docs,
                     double k1 = 1.2, double b = 0.75);

/// Top-k documents under the shared ranking order (zero scores included).
/// Throws ArgumentError if the query has no tokens.
RankedList bm25_top_k(const Bm25Index& index, std::string_view query, std::size_t k);

}  // namespace clipita

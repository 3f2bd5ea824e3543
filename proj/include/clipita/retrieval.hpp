#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clipita/nncore.hpp"

namespace clipita {

struct ScoredItem {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

/// Sorted by score descending, ties by ascending id.
using RankedList = std::vector<ScoredItem>;

/// The canonical ranking order used everywhere.
bool ranks_before(const ScoredItem& a, const ScoredItem& b);
void sort_ranked(RankedList& list);

/// Brute-force cosine index over unit-normalized rows.
class RetrievalIndex {
 public:
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const DenseMatrix& vectors() const noexcept { return vectors_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return vectors_.cols(); }

 private:
  friend RetrievalIndex build_index(std::vector<std::string> ids, const DenseMatrix& vectors);
  std::vector<std::string> ids_;
  DenseMatrix vectors_;
};

/// Throws ValidationError on zero rows, duplicate ids or a length mismatch.
RetrievalIndex build_index(std::vector<std::string> ids, const DenseMatrix& vectors);

RankedList top_k(const RetrievalIndex& index, std::span<const double> query, std::size_t k);

using RelevantSet = std::set<std::string, std::less<>>;

double precision_at_k(const RankedList& ranked, const RelevantSet& relevant, std::size_t k);
/// Truncated AP normalized by min(|relevant|, k).
double average_precision_at_k(const RankedList& ranked, const RelevantSet& relevant,
                              std::size_t k);
double r_precision(const RankedList& ranked, const RelevantSet& relevant);

struct MetricKs {
  std::vector<std::size_t> precision{1, 5, 10};
  std::vector<std::size_t> average_precision{5, 10};

  std::size_t max_k() const;
};

/// Macro-averaged metrics. n_queries == 0 marks an empty report.
struct MetricsReport {
  std::map<std::size_t, double> p_at;
  std::map<std::size_t, double> map_at;
  double r_precision = 0.0;
  std::size_t n_queries = 0;

  bool empty() const noexcept { return n_queries == 0; }
  bool operator==(const MetricsReport&) const = default;
};

/// Metrics of one ranking, as a single-query report.
MetricsReport score_ranking(const RankedList& ranked, const RelevantSet& relevant,
                            const MetricKs& ks = {});

/// Unweighted mean over per-query reports (each with n_queries == 1 or more,
/// weighted by n_queries). An empty input yields an empty report with the
/// metric keys present.
MetricsReport macro_average(std::span<const MetricsReport> per_query, const MetricKs& ks = {});

struct EvalQuery {
  std::vector<double> vector;
  RelevantSet relevant;
};

/// Retrieval depth per query is max(max_k, |relevant|).
MetricsReport evaluate(const RetrievalIndex& index, std::span<const EvalQuery> queries,
                       const MetricKs& ks = {});

/// Keys p@K, map@K, r-precision, n_queries; metric values are null when the
/// report is empty.
nlohmann::ordered_json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

}  // namespace clipita

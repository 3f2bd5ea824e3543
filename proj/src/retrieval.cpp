#include "clipita/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace clipita {

bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

void sort_ranked(RankedList& list) { std::sort(list.begin(), list.end(), ranks_before); }

RetrievalIndex build_index(std::vector<std::string> ids, const DenseMatrix& vectors) {
  if (ids.size() != vectors.rows()) {
    throw ValidationError("build_index: ids and vectors differ in length");
  }
  std::unordered_set<std::string> seen;
  RetrievalIndex index;
  index.vectors_ = vectors;
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    if (!seen.insert(ids[r]).second) {
      throw ValidationError("build_index: duplicate id " + ids[r]);
    }
    auto row = index.vectors_.row(r);
    double sq = 0.0;
    for (double x : row) sq += x * x;
    if (sq == 0.0 || !std::isfinite(sq)) {
      throw ValidationError("build_index: zero or non-finite vector for " + ids[r]);
    }
    const double n = std::sqrt(sq);
    for (double& x : row) x /= n;
  }
  index.ids_ = std::move(ids);
  return index;
}

RankedList top_k(const RetrievalIndex& index, std::span<const double> query, std::size_t k) {
  if (query.size() != index.dim()) {
    throw ArgumentError("top_k: query dimension " + std::to_string(query.size()) +
                        " != index dimension " + std::to_string(index.dim()));
  }
  double sq = 0.0;
  for (double x : query) sq += x * x;
  if (sq == 0.0) {
    throw ArgumentError("top_k: zero query vector");
  }
  const double qn = std::sqrt(sq);
  RankedList all;
  all.reserve(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto row = index.vectors().row(r);
    double dot = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) dot += row[i] * query[i];
    all.push_back({index.ids()[r], dot / qn});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    ranks_before);
  all.resize(keep);
  return all;
}

namespace {

std::size_t hits_in_prefix(const RankedList& ranked, const RelevantSet& relevant,
                           std::size_t depth) {
  std::size_t hits = 0;
  const std::size_t n = std::min(depth, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    hits += relevant.count(ranked[i].id);
  }
  return hits;
}

}  // namespace

double precision_at_k(const RankedList& ranked, const RelevantSet& relevant, std::size_t k) {
  if (k == 0) throw ArgumentError("precision_at_k requires k >= 1");
  return static_cast<double>(hits_in_prefix(ranked, relevant, k)) / static_cast<double>(k);
}

double average_precision_at_k(const RankedList& ranked, const RelevantSet& relevant,
                              std::size_t k) {
  if (k == 0) throw ArgumentError("average_precision_at_k requires k >= 1");
  if (relevant.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.count(ranked[i].id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

double r_precision(const RankedList& ranked, const RelevantSet& relevant) {
  const std::size_t r = std::min(relevant.size(), ranked.size());
  if (r == 0) return 0.0;
  return static_cast<double>(hits_in_prefix(ranked, relevant, r)) / static_cast<double>(r);
}

std::size_t MetricKs::max_k() const {
  std::size_t k = 1;
  for (auto v : precision) k = std::max(k, v);
  for (auto v : average_precision) k = std::max(k, v);
  return k;
}

MetricsReport score_ranking(const RankedList& ranked, const RelevantSet& relevant,
                            const MetricKs& ks) {
  MetricsReport m;
  for (auto k : ks.precision) m.p_at[k] = precision_at_k(ranked, relevant, k);
  for (auto k : ks.average_precision) m.map_at[k] = average_precision_at_k(ranked, relevant, k);
  m.r_precision = r_precision(ranked, relevant);
  m.n_queries = 1;
  return m;
}

MetricsReport macro_average(std::span<const MetricsReport> per_query, const MetricKs& ks) {
  MetricsReport out;
  for (auto k : ks.precision) out.p_at[k] = 0.0;
  for (auto k : ks.average_precision) out.map_at[k] = 0.0;
  for (const auto& q : per_query) {
    const double w = static_cast<double>(q.n_queries);
    for (auto& [k, v] : out.p_at) v += w * q.p_at.at(k);
    for (auto& [k, v] : out.map_at) v += w * q.map_at.at(k);
    out.r_precision += w * q.r_precision;
    out.n_queries += q.n_queries;
  }
  if (out.n_queries > 0) {
    const double n = static_cast<double>(out.n_queries);
    for (auto& [_, v] : out.p_at) v /= n;
    for (auto& [_, v] : out.map_at) v /= n;
    out.r_precision /= n;
  }
  return out;
}

MetricsReport evaluate(const RetrievalIndex& index, std::span<const EvalQuery> queries,
                       const MetricKs& ks) {
  if (queries.empty()) {
    throw ArgumentError("evaluate: empty query list");
  }
  std::vector<MetricsReport> per_query;
  per_query.reserve(queries.size());
  for (const auto& q : queries) {
    const std::size_t depth = std::max(ks.max_k(), q.relevant.size());
    per_query.push_back(score_ranking(top_k(index, q.vector, depth), q.relevant, ks));
  }
  return macro_average(per_query, ks);
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  auto put = [&](const std::string& key, double v) {
    if (report.empty()) {
      j[key] = nullptr;
    } else {
      j[key] = v;
    }
  };
  for (const auto& [k, v] : report.p_at) put("p@" + std::to_string(k), v);
  for (const auto& [k, v] : report.map_at) put("map@" + std::to_string(k), v);
  put("r-precision", report.r_precision);
  j["n_queries"] = report.n_queries;
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.n_queries = j.at("n_queries").get<std::size_t>();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const double v = it->is_null() ? 0.0 : it->get<double>();
    if (key.rfind("p@", 0) == 0) {
      m.p_at[std::stoul(key.substr(2))] = v;
    } else if (key.rfind("map@", 0) == 0) {
      m.map_at[std::stoul(key.substr(4))] = v;
    } else if (key == "r-precision") {
      m.r_precision = v;
    }
  }
  return m;
}

}  // namespace clipita

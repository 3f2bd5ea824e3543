#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

/// Central difference (f(x + h) - f(x - h)) / 2h for one coordinate of a
/// parameter vector that f reads by reference.
inline double central_difference(double& x, double h, const std::function<double()>& f) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

/// max |a - n| / max(1, |a|, |n|)-style relative error used by the gradient
/// checks: |a - n| / max(|a| + |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

/// Metrics from a 0/1 relevance vector of the ranking (position order) and
/// the total number of relevant items.
struct Metrics {
  double p1, p5, p10, ap5, ap10, rprec;
};

inline double precision(const std::vector<int>& rel, std::size_t k) {
  int hits = 0;
  for (std::size_t i = 0; i < rel.size() && i < k; ++i) hits += rel[i];
  return static_cast<double>(hits) / static_cast<double>(k);
}

inline double average_precision(const std::vector<int>& rel, std::size_t n_relevant,
                                std::size_t k) {
  if (n_relevant == 0) return 0.0;
  std::vector<double> precisions_at_hits;
  for (std::size_t i = 0; i < rel.size() && i < k; ++i) {
    if (rel[i]) precisions_at_hits.push_back(precision(rel, i + 1));
  }
  double sum = 0.0;
  for (double p : precisions_at_hits) sum += p;
  const std::size_t denom = n_relevant < k ? n_relevant : k;
  return sum / static_cast<double>(denom);
}

inline double r_precision(const std::vector<int>& rel, std::size_t n_relevant) {
  const std::size_t r = std::min(n_relevant, rel.size());
  if (r == 0) return 0.0;
  return precision(rel, r);
}

inline Metrics all_metrics(const std::vector<int>& rel, std::size_t n_relevant) {
  return {precision(rel, 1),
          precision(rel, 5),
          precision(rel, 10),
          average_precision(rel, n_relevant, 5),
          average_precision(rel, n_relevant, 10),
          r_precision(rel, n_relevant)};
}

}  // namespace oracle

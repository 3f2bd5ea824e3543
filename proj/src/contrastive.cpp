#include "clipita/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clipita {
namespace {

double norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

void check_batches(const DenseMatrix& c, const DenseMatrix& p, double tau) {
  if (c.rows() != p.rows() || c.cols() != p.cols()) {
    throw ArgumentError("category and product batches differ in shape");
  }
  if (c.rows() == 0) {
    throw ArgumentError("empty batch");
  }
  if (!(tau > 0.0)) {
    throw ArgumentError("temperature must be > 0");
  }
}

// Unit rows plus the original norms.
DenseMatrix normalized_rows(const DenseMatrix& m, std::vector<double>& norms,
                            const char* what) {
  DenseMatrix out = m;
  norms.resize(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = norm(m.row(r));
    if (n == 0.0) {
      throw ArgumentError(std::string(what) + " row " + std::to_string(r) + " is zero");
    }
    norms[r] = n;
    for (double& x : out.row(r)) x /= n;
  }
  return out;
}

DenseMatrix scaled_gram(const DenseMatrix& a, const DenseMatrix& b, double tau) {
  DenseMatrix s(a.rows(), b.rows());
  for (std::size_t j = 0; j < a.rows(); ++j) {
    const auto aj = a.row(j);
    for (std::size_t k = 0; k < b.rows(); ++k) {
      const auto bk = b.row(k);
      double dot = 0.0;
      for (std::size_t i = 0; i < aj.size(); ++i) dot += aj[i] * bk[i];
      s(j, k) = std::clamp(dot, -1.0, 1.0) / tau;
    }
  }
  return s;
}

// Row-wise and column-wise softmax of s with max subtraction.
void softmaxes(const DenseMatrix& s, DenseMatrix& row_sm, DenseMatrix& col_sm,
               std::vector<double>& row_lse, std::vector<double>& col_lse) {
  const std::size_t n = s.rows();
  row_sm = DenseMatrix(n, n);
  col_sm = DenseMatrix(n, n);
  row_lse.assign(n, 0.0);
  col_lse.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double mx = s(j, 0);
    for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, s(j, k));
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += std::exp(s(j, k) - mx);
    row_lse[j] = mx + std::log(sum);
    for (std::size_t k = 0; k < n; ++k) row_sm(j, k) = std::exp(s(j, k) - row_lse[j]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    double mx = s(0, k);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, s(j, k));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(s(j, k) - mx);
    col_lse[k] = mx + std::log(sum);
    for (std::size_t j = 0; j < n; ++j) col_sm(j, k) = std::exp(s(j, k) - col_lse[k]);
  }
}

LossReport loss_from(const DenseMatrix& s, const std::vector<double>& row_lse,
                     const std::vector<double>& col_lse, double lambda) {
  const std::size_t n = s.rows();
  LossReport out;
  out.lambda = lambda;
  for (std::size_t j = 0; j < n; ++j) {
    out.c2p += row_lse[j] - s(j, j);
    out.p2c += col_lse[j] - s(j, j);
  }
  out.c2p /= static_cast<double>(n);
  out.p2c /= static_cast<double>(n);
  out.total = lambda * out.p2c + (1.0 - lambda) * out.c2p;
  return out;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ArgumentError("lambda must lie in [0, 1]");
  }
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ArgumentError("cosine: dimension mismatch");
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw ArgumentError("cosine: zero vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

SimMatrix sim_matrix(const DenseMatrix& categories, const DenseMatrix& products, double tau) {
  check_batches(categories, products, tau);
  std::vector<double> nc, np;
  const DenseMatrix c = normalized_rows(categories, nc, "category");
  const DenseMatrix p = normalized_rows(products, np, "product");
  return SimMatrix{scaled_gram(c, p, tau), tau};
}

LossReport info_nce(const SimMatrix& sim, double lambda) {
  if (sim.s.rows() != sim.s.cols() || sim.s.rows() == 0) {
    throw ArgumentError("info_nce requires a non-empty square similarity matrix");
  }
  check_lambda(lambda);
  DenseMatrix row_sm, col_sm;
  std::vector<double> row_lse, col_lse;
  softmaxes(sim.s, row_sm, col_sm, row_lse, col_lse);
  return loss_from(sim.s, row_lse, col_lse, lambda);
}

InfoNceGrad info_nce_grad(const DenseMatrix& categories, const DenseMatrix& products, double tau,
                          double lambda) {
  check_batches(categories, products, tau);
  check_lambda(lambda);
  const std::size_t n = categories.rows();
  const std::size_t d = categories.cols();
  std::vector<double> nc, np;
  const DenseMatrix c = normalized_rows(categories, nc, "category");
  const DenseMatrix p = normalized_rows(products, np, "product");
  const DenseMatrix s = scaled_gram(c, p, tau);

  DenseMatrix row_sm, col_sm;
  std::vector<double> row_lse, col_lse;
  softmaxes(s, row_sm, col_sm, row_lse, col_lse);

  InfoNceGrad out;
  out.loss = loss_from(s, row_lse, col_lse, lambda);

  // dL/ds(j,k) = ((1 - lambda)(rowsm - I) + lambda (colsm - I)) / n
  DenseMatrix gs(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double eye = j == k ? 1.0 : 0.0;
      gs(j, k) = ((1.0 - lambda) * (row_sm(j, k) - eye) + lambda * (col_sm(j, k) - eye)) * inv_n;
    }
  }

  // Gradients with respect to the unit rows, then through x / |x|.
  DenseMatrix dc_hat(n, d), dp_hat(n, d);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double g = gs(j, k) / tau;
      if (g == 0.0) continue;
      const auto cj = c.row(j);
      const auto pk = p.row(k);
      auto dcj = dc_hat.row(j);
      auto dpk = dp_hat.row(k);
      for (std::size_t i = 0; i < d; ++i) {
        dcj[i] += g * pk[i];
        dpk[i] += g * cj[i];
      }
    }
  }
  auto through_norm = [d](const DenseMatrix& unit, const DenseMatrix& dunit,
                          const std::vector<double>& norms) {
    DenseMatrix dx(unit.rows(), d);
    for (std::size_t r = 0; r < unit.rows(); ++r) {
      const auto u = unit.row(r);
      const auto du = dunit.row(r);
      double proj = 0.0;
      for (std::size_t i = 0; i < d; ++i) proj += u[i] * du[i];
      auto out_r = dx.row(r);
      for (std::size_t i = 0; i < d; ++i) out_r[i] = (du[i] - u[i] * proj) / norms[r];
    }
    return dx;
  };
  out.d_categories = through_norm(c, dc_hat, nc);
  out.d_products = through_norm(p, dp_hat, np);
  return out;
}

}  // namespace clipita

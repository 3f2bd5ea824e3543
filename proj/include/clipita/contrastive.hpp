#pragma once

#include <span>

#include "clipita/nncore.hpp"

namespace clipita {

/// dot(u, v) / (|u| |v|). Throws ArgumentError on zero vectors or unequal
/// lengths.
double cosine(std::span<const double> u, std::span<const double> v);

/// s(j, k) = cosine(c_j, p_k) / tau for a batch of category rows c and
/// product rows p.
struct SimMatrix {
  DenseMatrix s;
  double tau = 1.0;
};

SimMatrix sim_matrix(const DenseMatrix& categories, const DenseMatrix& products, double tau);

struct LossReport {
  double total = 0.0;  // mean_j(lambda * p2c_j + (1 - lambda) * c2p_j)
  double c2p = 0.0;    // mean row-wise InfoNCE
  double p2c = 0.0;    // mean column-wise InfoNCE
  double lambda = 0.5;
};

/// Bidirectional InfoNCE over in-batch negatives; lambda weights the
/// product-to-category direction.
LossReport info_nce(const SimMatrix& sim, double lambda);

struct InfoNceGrad {
  LossReport loss;
  DenseMatrix d_categories;
  DenseMatrix d_products;
};

/// Loss and its exact gradient with respect to the raw (unnormalized) rows,
/// differentiating through the cosine normalization.
InfoNceGrad info_nce_grad(const DenseMatrix& categories, const DenseMatrix& products, double tau,
                          double lambda);

}  // namespace clipita

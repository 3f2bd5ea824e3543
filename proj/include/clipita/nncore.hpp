#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "clipita/common.hpp"

namespace clipita {

/// Row-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
double gelu(double x);
double gelu_derivative(double x);
DenseMatrix gelu(const DenseMatrix& x);

/// Population-variance layer normalization over one feature vector.
std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps);

struct Linear {
  DenseMatrix weight;  // out x in
  std::vector<double> bias;

  std::size_t in() const noexcept { return weight.cols(); }
  std::size_t out() const noexcept { return weight.rows(); }
};

struct LayerNormParams {
  std::vector<double> gain;
  std::vector<double> bias;
  double eps = 1e-5;
};

/// Linear -> GELU -> LayerNorm -> Linear -> GELU -> LayerNorm -> Linear.
///
/// The same type doubles as the gradient container returned by
/// head_backward, so parameters() and the gradients line up one to one.
struct ProjectionHead {
  Linear fc1;
  LayerNormParams ln1;
  Linear fc2;
  LayerNormParams ln2;
  Linear fc3;

  std::size_t d_in() const noexcept { return fc1.in(); }
  std::size_t d_out() const noexcept { return fc3.out(); }

  /// Fixed order: fc1.w, fc1.b, ln1.gain, ln1.bias, fc2.w, fc2.b, ln2.gain,
  /// ln2.bias, fc3.w, fc3.b.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;

  /// Zero-filled head with the same shapes (and LayerNorm eps).
  ProjectionHead zeros_like() const;

  bool operator==(const ProjectionHead& other) const;
};

using HeadGrads = ProjectionHead;

/// Throws ArgumentError on an inconsistent dimension chain or non-finite
/// parameter.
void validate_head(const ProjectionHead& head);

/// Xavier-uniform weights, zero biases, unit LayerNorm gains.
ProjectionHead init_head(std::size_t d_in, std::size_t h1, std::size_t h2, std::size_t d_out,
                         Rng& rng);

struct ForwardCache {
  DenseMatrix input;
  DenseMatrix pre1, xhat1, out1;  // fc1 output, normalized GELU, LayerNorm output
  DenseMatrix pre2, xhat2, out2;
  std::vector<double> inv_std1, inv_std2;  // per row
  std::uint64_t fingerprint = 0;           // parameters at forward time
};

struct HeadOutput {
  DenseMatrix z;
  ForwardCache cache;
};

HeadOutput head_forward(const ProjectionHead& head, const DenseMatrix& x);

/// Forward pass without keeping activations.
DenseMatrix head_apply(const ProjectionHead& head, const DenseMatrix& x);

struct HeadBackward {
  DenseMatrix dx;
  HeadGrads grads;
};

/// Exact gradients for a forward pass of the same head. Throws ArgumentError
/// when the cache does not belong to the current parameters or dz is
/// mis-shaped.
HeadBackward head_backward(const ProjectionHead& head, const ForwardCache& cache,
                           const DenseMatrix& dz);

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  AdamWConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  AdamWState() = default;
  /// Zero moments shaped like params.
  AdamWState(AdamWConfig cfg, const std::vector<std::span<const double>>& params);
};

/// One decoupled-weight-decay Adam update. Lazily sizes empty moment buffers.
/// Throws ArgumentError (leaving everything untouched) on shape mismatch or a
/// non-finite gradient.
void adamw_step(const std::vector<std::span<double>>& params,
                const std::vector<std::span<const double>>& grads, AdamWState& state);

// Checkpoint serialization.
nlohmann::json head_to_json(const ProjectionHead& head);
ProjectionHead head_from_json(const nlohmann::json& j);
nlohmann::json adamw_to_json(const AdamWState& state);
AdamWState adamw_from_json(const nlohmann::json& j);

}  // namespace clipita

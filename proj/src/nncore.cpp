#include "clipita/nncore.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace clipita {
namespace {

constexpr double kGeluCoeff = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

// y = x W^T + b
DenseMatrix linear_forward(const Linear& layer, const DenseMatrix& x) {
  DenseMatrix y(x.rows(), layer.out());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const auto w = layer.weight.row(o);
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < xr.size(); ++i) acc += w[i] * xr[i];
      yr[o] = acc;
    }
  }
  return y;
}

// Accumulates dW += dy^T x, db += colsum(dy); returns dx = dy W.
DenseMatrix linear_backward(const Linear& layer, const DenseMatrix& x, const DenseMatrix& dy,
                            Linear& grad) {
  DenseMatrix dx(x.rows(), layer.in());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto dyr = dy.row(r);
    auto dxr = dx.row(r);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      grad.bias[o] += g;
      auto gw = grad.weight.row(o);
      const auto w = layer.weight.row(o);
      for (std::size_t i = 0; i < xr.size(); ++i) {
        gw[i] += g * xr[i];
        dxr[i] += g * w[i];
      }
    }
  }
  return dx;
}

// GELU then LayerNorm, row by row, recording what the backward pass needs.
void gelu_norm_forward(const DenseMatrix& pre, const LayerNormParams& ln, DenseMatrix& xhat,
                       DenseMatrix& out, std::vector<double>& inv_std) {
  const std::size_t n = pre.cols();
  xhat = DenseMatrix(pre.rows(), n);
  out = DenseMatrix(pre.rows(), n);
  inv_std.assign(pre.rows(), 0.0);
  std::vector<double> act(n);
  for (std::size_t r = 0; r < pre.rows(); ++r) {
    const auto p = pre.row(r);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      act[i] = gelu(p[i]);
      mean += act[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (act[i] - mean) * (act[i] - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + ln.eps);
    inv_std[r] = is;
    auto xh = xhat.row(r);
    auto o = out.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      xh[i] = (act[i] - mean) * is;
      o[i] = ln.gain[i] * xh[i] + ln.bias[i];
    }
  }
}

// Given dL/d(out), accumulates LayerNorm parameter grads and returns dL/d(pre).
DenseMatrix gelu_norm_backward(const DenseMatrix& pre, const DenseMatrix& xhat,
                               const std::vector<double>& inv_std, const LayerNormParams& ln,
                               const DenseMatrix& dout, LayerNormParams& grad) {
  const std::size_t n = pre.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  DenseMatrix dpre(pre.rows(), n);
  std::vector<double> dxhat(n);
  for (std::size_t r = 0; r < pre.rows(); ++r) {
    const auto xh = xhat.row(r);
    const auto d = dout.row(r);
    double mean_d = 0.0;
    double mean_dx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      grad.gain[i] += d[i] * xh[i];
      grad.bias[i] += d[i];
      dxhat[i] = d[i] * ln.gain[i];
      mean_d += dxhat[i];
      mean_dx += dxhat[i] * xh[i];
    }
    mean_d *= inv_n;
    mean_dx *= inv_n;
    const auto p = pre.row(r);
    auto dp = dpre.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double dact = inv_std[r] * (dxhat[i] - mean_d - xh[i] * mean_dx);
      dp[i] = dact * gelu_derivative(p[i]);
    }
  }
  return dpre;
}

std::uint64_t fingerprint(const ProjectionHead& head) {
  std::uint64_t h = kFnvOffset;
  for (auto p : head.parameters()) {
    std::string_view bytes(reinterpret_cast<const char*>(p.data()), p.size_bytes());
    h = mix64(h ^ fnv1a64(bytes));
  }
  return h;
}

Linear zero_linear(const Linear& l) {
  return Linear{DenseMatrix(l.out(), l.in()), std::vector<double>(l.out(), 0.0)};
}

LayerNormParams zero_ln(const LayerNormParams& ln) {
  return LayerNormParams{std::vector<double>(ln.gain.size(), 0.0),
                         std::vector<double>(ln.bias.size(), 0.0), ln.eps};
}

Linear xavier_linear(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Linear l{DenseMatrix(out, in), std::vector<double>(out, 0.0)};
  for (double& w : l.weight.data()) w = rng.uniform(-limit, limit);
  return l;
}

LayerNormParams unit_ln(std::size_t n) {
  return LayerNormParams{std::vector<double>(n, 1.0), std::vector<double>(n, 0.0), 1e-5};
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ArgumentError("DenseMatrix data length does not match rows*cols");
  }
}

double gelu(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
  const double t = std::tanh(u);
  const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

DenseMatrix gelu(const DenseMatrix& x) {
  DenseMatrix y = x;
  for (double& v : y.data()) v = gelu(v);
  return y;
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps) {
  const std::size_t n = x.size();
  if (n < 2 || gain.size() != n || bias.size() != n) {
    throw ArgumentError("layer_norm requires n >= 2 and matching gain/bias sizes");
  }
  if (!(eps > 0.0)) {
    throw ArgumentError("layer_norm requires eps > 0");
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double is = 1.0 / std::sqrt(var + eps);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = gain[i] * (x[i] - mean) * is + bias[i];
  return y;
}

std::vector<std::span<double>> ProjectionHead::parameters() {
  return {fc1.weight.data(), fc1.bias, ln1.gain, ln1.bias, fc2.weight.data(),
          fc2.bias,          ln2.gain, ln2.bias, fc3.weight.data(), fc3.bias};
}

std::vector<std::span<const double>> ProjectionHead::parameters() const {
  return {fc1.weight.data(), fc1.bias, ln1.gain, ln1.bias, fc2.weight.data(),
          fc2.bias,          ln2.gain, ln2.bias, fc3.weight.data(), fc3.bias};
}

std::size_t ProjectionHead::parameter_count() const {
  std::size_t n = 0;
  for (auto p : parameters()) n += p.size();
  return n;
}

ProjectionHead ProjectionHead::zeros_like() const {
  return ProjectionHead{zero_linear(fc1), zero_ln(ln1), zero_linear(fc2), zero_ln(ln2),
                        zero_linear(fc3)};
}

bool ProjectionHead::operator==(const ProjectionHead& other) const {
  const auto a = parameters();
  const auto b = other.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() || !std::equal(a[i].begin(), a[i].end(), b[i].begin())) {
      return false;
    }
  }
  return fc1.in() == other.fc1.in() && fc2.in() == other.fc2.in() &&
         fc3.in() == other.fc3.in() && ln1.eps == other.ln1.eps && ln2.eps == other.ln2.eps;
}

void validate_head(const ProjectionHead& head) {
  const bool chain = head.fc1.bias.size() == head.fc1.out() &&
                     head.ln1.gain.size() == head.fc1.out() &&
                     head.ln1.bias.size() == head.fc1.out() && head.fc2.in() == head.fc1.out() &&
                     head.fc2.bias.size() == head.fc2.out() &&
                     head.ln2.gain.size() == head.fc2.out() &&
                     head.ln2.bias.size() == head.fc2.out() && head.fc3.in() == head.fc2.out() &&
                     head.fc3.bias.size() == head.fc3.out();
  if (!chain || head.d_in() == 0 || head.d_out() == 0) {
    throw ArgumentError("projection head has an inconsistent dimension chain");
  }
  if (!(head.ln1.eps > 0.0) || !(head.ln2.eps > 0.0)) {
    throw ArgumentError("projection head LayerNorm eps must be > 0");
  }
  for (auto p : head.parameters()) {
    for (double v : p) {
      if (!std::isfinite(v)) throw ArgumentError("projection head has a non-finite parameter");
    }
  }
}

ProjectionHead init_head(std::size_t d_in, std::size_t h1, std::size_t h2, std::size_t d_out,
                         Rng& rng) {
  if (d_in == 0 || h1 == 0 || h2 == 0 || d_out == 0) {
    throw ArgumentError("init_head requires positive dimensions");
  }
  ProjectionHead head;
  head.fc1 = xavier_linear(d_in, h1, rng);
  head.ln1 = unit_ln(h1);
  head.fc2 = xavier_linear(h1, h2, rng);
  head.ln2 = unit_ln(h2);
  head.fc3 = xavier_linear(h2, d_out, rng);
  return head;
}

HeadOutput head_forward(const ProjectionHead& head, const DenseMatrix& x) {
  if (x.cols() != head.d_in()) {
    throw ArgumentError("head_forward: input has " + std::to_string(x.cols()) +
                        " columns, head expects " + std::to_string(head.d_in()));
  }
  HeadOutput out;
  auto& c = out.cache;
  c.input = x;
  c.pre1 = linear_forward(head.fc1, x);
  gelu_norm_forward(c.pre1, head.ln1, c.xhat1, c.out1, c.inv_std1);
  c.pre2 = linear_forward(head.fc2, c.out1);
  gelu_norm_forward(c.pre2, head.ln2, c.xhat2, c.out2, c.inv_std2);
  out.z = linear_forward(head.fc3, c.out2);
  c.fingerprint = fingerprint(head);
  return out;
}

DenseMatrix head_apply(const ProjectionHead& head, const DenseMatrix& x) {
  return head_forward(head, x).z;
}

HeadBackward head_backward(const ProjectionHead& head, const ForwardCache& cache,
                           const DenseMatrix& dz) {
  if (cache.input.cols() != head.d_in() || cache.out2.cols() != head.fc3.in() ||
      cache.fingerprint != fingerprint(head)) {
    throw ArgumentError("head_backward: cache does not match the head's current parameters");
  }
  if (dz.rows() != cache.input.rows() || dz.cols() != head.d_out()) {
    throw ArgumentError("head_backward: dz shape does not match the forward batch");
  }
  HeadBackward out{DenseMatrix(), head.zeros_like()};
  auto& g = out.grads;
  const DenseMatrix d_out2 = linear_backward(head.fc3, cache.out2, dz, g.fc3);
  const DenseMatrix d_pre2 =
      gelu_norm_backward(cache.pre2, cache.xhat2, cache.inv_std2, head.ln2, d_out2, g.ln2);
  const DenseMatrix d_out1 = linear_backward(head.fc2, cache.out1, d_pre2, g.fc2);
  const DenseMatrix d_pre1 =
      gelu_norm_backward(cache.pre1, cache.xhat1, cache.inv_std1, head.ln1, d_out1, g.ln1);
  out.dx = linear_backward(head.fc1, cache.input, d_pre1, g.fc1);
  return out;
}

AdamWState::AdamWState(AdamWConfig cfg, const std::vector<std::span<const double>>& params)
    : config(cfg) {
  for (auto p : params) {
    m.emplace_back(p.size(), 0.0);
    v.emplace_back(p.size(), 0.0);
  }
}

void adamw_step(const std::vector<std::span<double>>& params,
                const std::vector<std::span<const double>>& grads, AdamWState& state) {
  if (params.size() != grads.size()) {
    throw ArgumentError("adamw_step: parameter and gradient lists differ in length");
  }
  if (state.m.empty() && state.v.empty()) {
    for (auto p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ArgumentError("adamw_step: optimizer state does not match parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() || state.m[k].size() != params[k].size() ||
        state.v[k].size() != params[k].size()) {
      throw ArgumentError("adamw_step: shape mismatch in tensor " + std::to_string(k));
    }
    for (double gv : grads[k]) {
      if (!std::isfinite(gv)) throw ArgumentError("adamw_step: non-finite gradient");
    }
  }
  const auto& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double gv = grads[k][i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gv;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gv * gv;
      // beta == 1 makes the correction factor 0; fall back to the raw moment.
      const double m_hat = bc1 == 0.0 ? m[i] : m[i] / bc1;
      const double v_hat = bc2 == 0.0 ? v[i] : v[i] / bc2;
      double& theta = params[k][i];
      theta -= c.lr * (m_hat / (std::sqrt(v_hat) + c.eps) + c.weight_decay * theta);
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json matrix_to_json(const DenseMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

DenseMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("weight matrix must be a non-empty array");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) throw ParseError("ragged weight matrix");
    for (const auto& v : row) data.push_back(v.get<double>());
  }
  return DenseMatrix(rows, cols, std::move(data));
}

nlohmann::json linear_to_json(const Linear& l) {
  return {{"weight", matrix_to_json(l.weight)}, {"bias", l.bias}};
}

Linear linear_from_json(const nlohmann::json& j) {
  return Linear{matrix_from_json(j.at("weight")), j.at("bias").get<std::vector<double>>()};
}

nlohmann::json ln_to_json(const LayerNormParams& ln) {
  return {{"gain", ln.gain}, {"bias", ln.bias}, {"eps", ln.eps}};
}

LayerNormParams ln_from_json(const nlohmann::json& j) {
  return LayerNormParams{j.at("gain").get<std::vector<double>>(),
                         j.at("bias").get<std::vector<double>>(), j.at("eps").get<double>()};
}

}  // namespace

nlohmann::json head_to_json(const ProjectionHead& head) {
  return {{"fc1", linear_to_json(head.fc1)}, {"ln1", ln_to_json(head.ln1)},
          {"fc2", linear_to_json(head.fc2)}, {"ln2", ln_to_json(head.ln2)},
          {"fc3", linear_to_json(head.fc3)}};
}

ProjectionHead head_from_json(const nlohmann::json& j) {
  try {
    ProjectionHead head{linear_from_json(j.at("fc1")), ln_from_json(j.at("ln1")),
                        linear_from_json(j.at("fc2")), ln_from_json(j.at("ln2")),
                        linear_from_json(j.at("fc3"))};
    validate_head(head);
    return head;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed projection head: ") + e.what());
  }
}

nlohmann::json adamw_to_json(const AdamWState& s) {
  return {{"lr", s.config.lr},
          {"beta1", s.config.beta1},
          {"beta2", s.config.beta2},
          {"eps", s.config.eps},
          {"weight_decay", s.config.weight_decay},
          {"t", s.t},
          {"m", s.m},
          {"v", s.v}};
}

AdamWState adamw_from_json(const nlohmann::json& j) {
  try {
    AdamWState s;
    s.config = AdamWConfig{j.at("lr").get<double>(), j.at("beta1").get<double>(),
                           j.at("beta2").get<double>(), j.at("eps").get<double>(),
                           j.at("weight_decay").get<double>()};
    s.t = j.at("t").get<std::uint64_t>();
    s.m = j.at("m").get<std::vector<std::vector<double>>>();
    s.v = j.at("v").get<std::vector<std::vector<double>>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed optimizer state: ") + e.what());
  }
}

}  // namespace clipita

#include "uniclip/layers.hpp"

#include <algorithm>
#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

double gelu(double x) noexcept {
  const double inner = kGeluSqrt2OverPi * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_derivative(double x) noexcept {
  const double inner = kGeluSqrt2OverPi * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(inner);
  const double d_inner = kGeluSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner;
}

DenseMatrix gelu(const DenseMatrix& x) {
  DenseMatrix out = x;
  for (auto& v : out.values()) v = gelu(v);
  return out;
}

DenseMatrix gelu_backward(const DenseMatrix& input, const DenseMatrix& grad_out) {
  require_same_shape(input, grad_out, "gelu_backward");
  DenseMatrix out(input.rows(), input.cols());
  auto in = input.values();
  auto g = grad_out.values();
  auto o = out.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = g[k] * gelu_derivative(in[k]);
  return out;
}

DenseMatrix affine_forward(const DenseMatrix& input, const DenseMatrix& weights, const DenseMatrix& bias) {
  if (input.cols() != weights.rows()) {
    throw ShapeError("affine_forward: input " + input.shape_string() + " vs weights " +
                     weights.shape_string());
  }
  if (bias.rows() != 1 || bias.cols() != weights.cols()) {
    throw ShapeError("affine_forward: bias " + bias.shape_string() + " vs weights " +
                     weights.shape_string());
  }
  DenseMatrix out = matmul(input, weights);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias(0, c);
  }
  return out;
}

DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix w(fan_in, fan_out);
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : w.values()) v = dist(rng);
  return w;
}

// ---------------------------------------------------------------------------

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
               bool zero_init)
    : in_(in), out_(out), w_name_(prefix + ".weight"), b_name_(prefix + ".bias") {
  if (in == 0 || out == 0) throw ShapeError("Linear '" + prefix + "': zero width");
  DenseMatrix w = zero_init ? DenseMatrix(in, out) : glorot_uniform(in, out, rng);
  w_ = store.add(w_name_, std::move(w));
  b_ = store.add(b_name_, DenseMatrix(1, out), false);
}

DenseMatrix Linear::forward(const ParamStore& store, const DenseMatrix& x) {
  input_ = x;
  return affine_forward(x, store.value(w_), store.value(b_));
}

DenseMatrix Linear::backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads,
                             std::size_t first_input_column) const {
  if (grad_out.rows() != input_.rows() || grad_out.cols() != out_) {
    throw ShapeError("Linear::backward: grad " + grad_out.shape_string() + " vs cached input " +
                     input_.shape_string());
  }
  grads.slot(w_name_, in_, out_) += matmul_at_b(input_, grad_out);
  auto& db = grads.slot(b_name_, 1, out_);
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    for (std::size_t c = 0; c < out_; ++c) db(0, c) += grad_out(r, c);
  }
  return matmul_a_bt(grad_out, store.value(w_), std::min(first_input_column, in_));
}

// ---------------------------------------------------------------------------

LayerNorm::LayerNorm(ParamStore& store, const std::string& prefix, std::size_t width)
    : width_(width), gain_name_(prefix + ".gain"), shift_name_(prefix + ".shift") {
  gain_ = store.add(gain_name_, DenseMatrix(1, width, 1.0), false);
  shift_ = store.add(shift_name_, DenseMatrix(1, width), false);
}

DenseMatrix LayerNorm::forward(const ParamStore& store, const DenseMatrix& x) {
  if (x.cols() != width_) {
    throw ShapeError("LayerNorm: width " + std::to_string(width_) + " vs input " + x.shape_string());
  }
  const auto& gain = store.value(gain_);
  const auto& shift = store.value(shift_);
  normalized_ = DenseMatrix(x.rows(), width_);
  inv_std_.assign(x.rows(), 0.0);
  DenseMatrix out(x.rows(), width_);
  const double n = static_cast<double>(width_);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_[r] = inv;
    for (std::size_t c = 0; c < width_; ++c) {
      const double xhat = (row[c] - mean) * inv;
      normalized_(r, c) = xhat;
      out(r, c) = xhat * gain(0, c) + shift(0, c);
    }
  }
  return out;
}

DenseMatrix LayerNorm::backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const {
  require_same_shape(grad_out, normalized_, "LayerNorm::backward");
  const auto& gain = store.value(gain_);
  auto& dgain = grads.slot(gain_name_, 1, width_);
  auto& dshift = grads.slot(shift_name_, 1, width_);
  DenseMatrix dx(grad_out.rows(), width_);
  const double n = static_cast<double>(width_);
  std::vector<double> dxhat(width_);
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < width_; ++c) {
      const double g = grad_out(r, c);
      dgain(0, c) += g * normalized_(r, c);
      dshift(0, c) += g;
      dxhat[c] = g * gain(0, c);
      sum_dxhat += dxhat[c];
      sum_dxhat_xhat += dxhat[c] * normalized_(r, c);
    }
    for (std::size_t c = 0; c < width_; ++c) {
      dx(r, c) = inv_std_[r] / n * (n * dxhat[c] - sum_dxhat - normalized_(r, c) * sum_dxhat_xhat);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------

ResidualBlock::ResidualBlock(ParamStore& store, const std::string& prefix, std::size_t width,
                             std::size_t expansion, Rng& rng, bool zero_output)
    : width_(width),
      norm_(store, prefix + ".norm", width),
      expand_(store, prefix + ".expand", width, width * expansion, rng),
      contract_(store, prefix + ".contract", width * expansion, width, rng, zero_output) {}

DenseMatrix ResidualBlock::forward(const ParamStore& store, const DenseMatrix& x) {
  if (x.cols() != width_) {
    throw ShapeError("ResidualBlock: width " + std::to_string(width_) + " vs input " + x.shape_string());
  }
  pre_activation_ = expand_.forward(store, norm_.forward(store, x));
  DenseMatrix out = contract_.forward(store, gelu(pre_activation_));
  out += x;
  return out;
}

DenseMatrix ResidualBlock::backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const {
  DenseMatrix g = contract_.backward(store, grad_out, grads);
  g = gelu_backward(pre_activation_, g);
  g = expand_.backward(store, g, grads);
  DenseMatrix dx = norm_.backward(store, g, grads);
  dx += grad_out;
  return dx;
}

// ---------------------------------------------------------------------------

Mlp::Mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw ShapeError("Mlp '" + prefix + "': needs at least two widths");
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    layers_.emplace_back(store, prefix + ".layer" + std::to_string(k), widths[k], widths[k + 1], rng);
  }
}

DenseMatrix Mlp::forward(const ParamStore& store, const DenseMatrix& x) {
  pre_activations_.clear();
  DenseMatrix h = layers_.front().forward(store, x);
  for (std::size_t k = 1; k < layers_.size(); ++k) {
    pre_activations_.push_back(h);
    h = layers_[k].forward(store, gelu(h));
  }
  return h;
}

DenseMatrix Mlp::backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads,
                          std::size_t first_input_column) const {
  DenseMatrix g = grad_out;
  for (std::size_t k = layers_.size(); k-- > 1;) {
    g = layers_[k].backward(store, g, grads);
    g = gelu_backward(pre_activations_[k - 1], g);
  }
  return layers_.front().backward(store, g, grads, first_input_column);
}

}  // namespace uniclip

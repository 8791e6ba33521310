#pragma once

#include <string>
#include <vector>

#include "uniclip/dense.hpp"
#include "uniclip/param_store.hpp"
#include "uniclip/rng.hpp"

namespace uniclip {

// GELU, tanh approximation:
//   gelu(x) = 0.5 x (1 + tanh(k0 (x + k1 x^3))),  k0 = sqrt(2/pi), k1 = 0.044715
inline constexpr double kGeluSqrt2OverPi = 0.7978845608028654;
inline constexpr double kGeluCubic = 0.044715;

double gelu(double x) noexcept;
double gelu_derivative(double x) noexcept;
DenseMatrix gelu(const DenseMatrix& x);
/// Elementwise grad_out * gelu'(input).
DenseMatrix gelu_backward(const DenseMatrix& input, const DenseMatrix& grad_out);

/// out = input · weights + bias (bias broadcast per row).
DenseMatrix affine_forward(const DenseMatrix& input, const DenseMatrix& weights, const DenseMatrix& bias);

/// Glorot-uniform matrix in ±sqrt(6 / (fan_in + fan_out)).
DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Affine layer whose weights live in a ParamStore. Caches its last input.
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
         bool zero_init = false);

  DenseMatrix forward(const ParamStore& store, const DenseMatrix& x);
  /// Accumulates weight/bias gradients; returns the gradient w.r.t. the cached input
  /// columns from `first_input_column` on (rows × 0 when none are requested).
  DenseMatrix backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads,
                       std::size_t first_input_column = 0) const;

  [[nodiscard]] std::size_t in_width() const noexcept { return in_; }
  [[nodiscard]] std::size_t out_width() const noexcept { return out_; }
  [[nodiscard]] const std::string& weight_name() const noexcept { return w_name_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::string w_name_;
  std::string b_name_;
  ParamId w_ = 0;
  ParamId b_ = 0;
  DenseMatrix input_;
};

/// Per-row layer normalization with learnable gain and shift.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& prefix, std::size_t width);

  DenseMatrix forward(const ParamStore& store, const DenseMatrix& x);
  DenseMatrix backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const;

  static constexpr double kEps = 1e-5;

 private:
  std::size_t width_ = 0;
  std::string gain_name_;
  std::string shift_name_;
  ParamId gain_ = 0;
  ParamId shift_ = 0;
  DenseMatrix normalized_;
  std::vector<double> inv_std_;
};

/// Transformer-style feedforward residual block: out = x + W2 · gelu(W1 · norm(x)).
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(ParamStore& store, const std::string& prefix, std::size_t width, std::size_t expansion,
                Rng& rng, bool zero_output = false);

  DenseMatrix forward(const ParamStore& store, const DenseMatrix& x);
  DenseMatrix backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const;

  [[nodiscard]] std::size_t width() const noexcept { return width_; }

 private:
  std::size_t width_ = 0;
  LayerNorm norm_;
  Linear expand_;
  Linear contract_;
  DenseMatrix pre_activation_;
};

/// Linear layers with GELU between consecutive layers (none after the last).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& widths, Rng& rng);

  DenseMatrix forward(const ParamStore& store, const DenseMatrix& x);
  /// Input gradient restricted to columns from `first_input_column` on, as in Linear.
  DenseMatrix backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads,
                       std::size_t first_input_column = 0) const;

  [[nodiscard]] std::size_t in_width() const noexcept { return layers_.front().in_width(); }
  [[nodiscard]] std::size_t out_width() const noexcept { return layers_.back().out_width(); }

 private:
  std::vector<Linear> layers_;
  std::vector<DenseMatrix> pre_activations_;
};

}  // namespace uniclip

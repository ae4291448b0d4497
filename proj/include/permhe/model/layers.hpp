// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "permhe/error.hpp"
#include "permhe/matrix.hpp"

namespace permhe::model {

enum class Activation : std::uint8_t { relu = 0, sigmoid, tanh, square };

constexpr std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::square: return "square";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  for (auto a : {Activation::relu, Activation::sigmoid, Activation::tanh, Activation::square})
    if (s == to_string(a)) return a;
  throw Error(ErrorCode::activation, "unknown activation '" + std::string(s) + "'");
}

inline Activation activation_from_code(std::uint8_t code) {
  require(code <= static_cast<std::uint8_t>(Activation::square), ErrorCode::activation,
          "unknown activation code " + std::to_string(code));
  return static_cast<Activation>(code);
}

inline double apply(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
    case Activation::square: return x * x;
  }
  return x;
}

/// y = W x + b, W is out x in.
struct Linear {
  DenseMatrix weights;
  std::vector<double> bias;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
  friend bool operator==(const Linear&, const Linear&) = default;
};

struct ActivationLayer {
  Activation kind = Activation::relu;
  friend bool operator==(const ActivationLayer&, const ActivationLayer&) = default;
};

/// 2-D convolution over a CHW tensor. kernels are [out][in][kh][kw].
struct Conv {
  std::size_t in_channels = 1, in_height = 1, in_width = 1;
  std::size_t out_channels = 1, kernel_height = 1, kernel_width = 1;
  std::size_t stride = 1, padding = 0;
  std::vector<double> kernels;
  std::vector<double> bias;  // one per output channel

  std::size_t out_height() const { return (in_height + 2 * padding - kernel_height) / stride + 1; }
  std::size_t out_width() const { return (in_width + 2 * padding - kernel_width) / stride + 1; }
  std::size_t in_dim() const { return in_channels * in_height * in_width; }
  std::size_t out_dim() const { return out_channels * out_height() * out_width(); }

  void validate() const {
    require(in_channels && in_height && in_width && out_channels && kernel_height && kernel_width && stride,
            ErrorCode::shape, "conv dimensions must be positive");
    require(kernel_height <= in_height + 2 * padding && kernel_width <= in_width + 2 * padding, ErrorCode::shape,
            "conv kernel larger than padded input");
    require(kernels.size() == out_channels * in_channels * kernel_height * kernel_width, ErrorCode::shape,
            "conv kernel count does not match declared shape");
    require(bias.size() == out_channels, ErrorCode::shape, "conv bias must have one entry per output channel");
  }
  friend bool operator==(const Conv&, const Conv&) = default;
};

using LayerSpec = std::variant<Linear, ActivationLayer, Conv>;

struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Unrolls a convolution into the equivalent dense layer acting on the
/// CHW-flattened input.
inline Linear lower_conv(const Conv& c) {
  c.validate();
  const std::size_t oh = c.out_height(), ow = c.out_width();
  DenseMatrix w(c.out_dim(), c.in_dim());
  std::vector<double> bias(c.out_dim());
  for (std::size_t o = 0; o < c.out_channels; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t row = (o * oh + y) * ow + x;
        bias[row] = c.bias[o];
        for (std::size_t ch = 0; ch < c.in_channels; ++ch) {
          for (std::size_t ky = 0; ky < c.kernel_height; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * c.stride + ky) - static_cast<std::ptrdiff_t>(c.padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(c.in_height)) continue;
            for (std::size_t kx = 0; kx < c.kernel_width; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * c.stride + kx) - static_cast<std::ptrdiff_t>(c.padding);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(c.in_width)) continue;
              const std::size_t col = (ch * c.in_height + static_cast<std::size_t>(iy)) * c.in_width + static_cast<std::size_t>(ix);
              w(row, col) += c.kernels[((o * c.in_channels + ch) * c.kernel_height + ky) * c.kernel_width + kx];
            }
          }
        }
      }
    }
  }
  return Linear{std::move(w), std::move(bias)};
}

inline std::size_t in_dim(const LayerSpec& l, std::size_t current) {
  if (auto* lin = std::get_if<Linear>(&l)) return lin->in_dim();
  if (auto* c = std::get_if<Conv>(&l)) return c->in_dim();
  return current;
}

inline std::size_t out_dim(const LayerSpec& l, std::size_t current) {
  if (auto* lin = std::get_if<Linear>(&l)) return lin->out_dim();
  if (auto* c = std::get_if<Conv>(&l)) return c->out_dim();
  return current;
}

/// Checks the dimension chain; returns the output dimension.
inline std::size_t validate(const ModelSpec& m) {
  require(m.input_dim > 0, ErrorCode::shape, "model input dimension must be positive");
  require(!m.layers.empty(), ErrorCode::shape, "model has no layers");
  std::size_t dim = m.input_dim;
  bool has_linear = false;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& l = m.layers[i];
    if (auto* lin = std::get_if<Linear>(&l)) {
      require(lin->weights.rows() > 0 && lin->weights.cols() > 0, ErrorCode::shape, "empty linear layer");
      require(lin->bias.size() == lin->out_dim(), ErrorCode::shape,
              "layer " + std::to_string(i) + ": bias length does not match output dimension");
      for (double v : lin->weights.entries())
        require(std::isfinite(v), ErrorCode::shape, "layer " + std::to_string(i) + ": non-finite weight");
      for (double v : lin->bias)
        require(std::isfinite(v), ErrorCode::shape, "layer " + std::to_string(i) + ": non-finite bias");
      has_linear = true;
    } else if (auto* c = std::get_if<Conv>(&l)) {
      c->validate();
      has_linear = true;
    }
    const std::size_t want = in_dim(l, dim);
    require(want == dim, ErrorCode::shape,
            "layer " + std::to_string(i) + " expects input dimension " + std::to_string(want) + " but receives " +
                std::to_string(dim));
    dim = out_dim(l, dim);
  }
  require(has_linear, ErrorCode::shape, "model has no linear layer");
  return dim;
}

/// Returns a copy with every Conv replaced by its dense equivalent.
inline ModelSpec lower(const ModelSpec& m) {
  ModelSpec out{m.input_dim, {}};
  out.layers.reserve(m.layers.size());
  for (const auto& l : m.layers) {
    if (auto* c = std::get_if<Conv>(&l))
      out.layers.emplace_back(lower_conv(*c));
    else
      out.layers.push_back(l);
  }
  return out;
}

inline double max_abs_weight(const ModelSpec& m) {
  double w = 0.0;
  for (const auto& l : m.layers) {
    if (auto* lin = std::get_if<Linear>(&l)) {
      for (double v : lin->weights.entries()) w = std::max(w, std::fabs(v));
      for (double v : lin->bias) w = std::max(w, std::fabs(v));
    } else if (auto* c = std::get_if<Conv>(&l)) {
      for (double v : c->kernels) w = std::max(w, std::fabs(v));
      for (double v : c->bias) w = std::max(w, std::fabs(v));
    }
  }
  return w;
}

}  // namespace permhe::model

// SPDX-License-Identifier: Apache-2.0
#pragma once

// Random-weight models for tests, benches and shape coverage. None of these
// are trained.

#include <cmath>
#include <vector>

#include "permhe/model/layers.hpp"
#include "permhe/prng.hpp"

namespace permhe::model {

/// Weights uniform in +-1/sqrt(fan_in), which keeps activations O(1).
inline Linear random_linear(Prng& rng, std::size_t in, std::size_t out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> w(in * out), b(out);
  for (auto& x : w) x = bound * (2.0 * rng.unit() - 1.0);
  for (auto& x : b) x = bound * (2.0 * rng.unit() - 1.0);
  return Linear{DenseMatrix(out, in, std::move(w)), std::move(b)};
}

/// dims = {in, hidden..., out}; activation between consecutive linear layers.
inline ModelSpec random_mlp(Prng& rng, const std::vector<std::size_t>& dims, Activation act = Activation::relu) {
  require(dims.size() >= 2, ErrorCode::shape, "an MLP needs at least input and output dimensions");
  ModelSpec m{dims.front(), {}};
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (i > 0) m.layers.emplace_back(ActivationLayer{act});
    m.layers.emplace_back(random_linear(rng, dims[i], dims[i + 1]));
  }
  return m;
}

inline Conv random_conv(Prng& rng, std::size_t ic, std::size_t h, std::size_t w, std::size_t oc, std::size_t k,
                        std::size_t stride, std::size_t padding) {
  Conv c{ic, h, w, oc, k, k, stride, padding, {}, {}};
  const double bound = 1.0 / std::sqrt(static_cast<double>(ic * k * k));
  c.kernels.resize(oc * ic * k * k);
  c.bias.resize(oc);
  for (auto& x : c.kernels) x = bound * (2.0 * rng.unit() - 1.0);
  for (auto& x : c.bias) x = bound * (2.0 * rng.unit() - 1.0);
  return c;
}

/// Per-channel 2x2 mean pooling written as a stride-2 convolution.
inline Conv mean_pool_conv(std::size_t channels, std::size_t h, std::size_t w) {
  Conv c{channels, h, w, channels, 2, 2, 2, 0, {}, std::vector<double>(channels, 0.0)};
  c.kernels.assign(channels * channels * 4, 0.0);
  for (std::size_t ch = 0; ch < channels; ++ch)
    for (std::size_t k = 0; k < 4; ++k) c.kernels[(ch * channels + ch) * 4 + k] = 0.25;
  return c;
}

/// LeNet-5 layer geometry on a 28x28 input: conv5(6, pad 2), pool, conv5(16),
/// pool, 120, 84, 10.
inline ModelSpec lenet5_shaped(Prng& rng, Activation act = Activation::relu) {
  ModelSpec m{28 * 28, {}};
  m.layers.emplace_back(random_conv(rng, 1, 28, 28, 6, 5, 1, 2));
  m.layers.emplace_back(ActivationLayer{act});
  m.layers.emplace_back(mean_pool_conv(6, 28, 28));
  m.layers.emplace_back(random_conv(rng, 6, 14, 14, 16, 5, 1, 0));
  m.layers.emplace_back(ActivationLayer{act});
  m.layers.emplace_back(mean_pool_conv(16, 10, 10));
  m.layers.emplace_back(random_linear(rng, 400, 120));
  m.layers.emplace_back(ActivationLayer{act});
  m.layers.emplace_back(random_linear(rng, 120, 84));
  m.layers.emplace_back(ActivationLayer{act});
  m.layers.emplace_back(random_linear(rng, 84, 10));
  return m;
}

}  // namespace permhe::model

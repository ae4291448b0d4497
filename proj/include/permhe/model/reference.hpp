// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <span>
#include <variant>
#include <vector>

#include "permhe/model/layers.hpp"

namespace permhe::model {

inline std::vector<double> apply_linear(const Linear& l, std::span<const double> x) {
  require(x.size() == l.in_dim(), ErrorCode::shape, "linear layer input dimension mismatch");
  std::vector<double> y(l.out_dim());
  for (std::size_t i = 0; i < l.out_dim(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < l.in_dim(); ++j) acc += l.weights(i, j) * x[j];
    y[i] = acc + l.bias[i];
  }
  return y;
}

/// Plaintext forward pass in double precision; the end-to-end oracle.
inline std::vector<double> reference_infer(const ModelSpec& m, std::span<const double> input) {
  require(input.size() == m.input_dim, ErrorCode::shape,
          "input has " + std::to_string(input.size()) + " values, model expects " + std::to_string(m.input_dim));
  std::vector<double> x(input.begin(), input.end());
  for (const auto& l : m.layers) {
    if (auto* lin = std::get_if<Linear>(&l)) {
      x = apply_linear(*lin, x);
    } else if (auto* c = std::get_if<Conv>(&l)) {
      x = apply_linear(lower_conv(*c), x);
    } else {
      const auto kind = std::get<ActivationLayer>(l).kind;
      for (auto& v : x) v = apply(kind, v);
    }
  }
  return x;
}

inline std::size_t argmax(std::span<const double> v) {
  require(!v.empty(), ErrorCode::shape, "argmax of empty vector");
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace permhe::model

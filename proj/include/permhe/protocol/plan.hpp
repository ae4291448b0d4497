// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "permhe/matrix.hpp"
#include "permhe/model/layers.hpp"

namespace permhe::protocol {

/// Zero-pads a rows x cols weight to order max(rows, cols) and places v in
/// column 0 of the companion matrix, so the top-left rows x 1 block of the
/// product is W v.
inline std::pair<SquareMatrix, SquareMatrix> pad_to_square(const DenseMatrix& w, std::span<const double> v) {
  require(w.rows() > 0 && w.cols() > 0, ErrorCode::dimension, "pad_to_square: empty weight");
  require(v.size() == w.cols(), ErrorCode::dimension,
          "pad_to_square: vector of length " + std::to_string(v.size()) + " for " + std::to_string(w.cols()) +
              " weight columns");
  const std::size_t n = std::max(w.rows(), w.cols());
  SquareMatrix pw(n), pv(n);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) pw(i, j) = w(i, j);
  for (std::size_t i = 0; i < v.size(); ++i) pv(i, 0) = v[i];
  return {std::move(pw), std::move(pv)};
}

/// Where input i of a session lives: matrix i mod g of each pack, column i / g.
struct Placement {
  std::size_t batch = 1;  // g, matrices per ciphertext
  std::size_t count = 1;  // inputs in the session

  std::size_t matrix_of(std::size_t i) const { return i % batch; }
  std::size_t column_of(std::size_t i) const { return i / batch; }
  std::size_t columns_needed() const { return (count + batch - 1) / batch; }
  bool occupied(std::size_t matrix, std::size_t column) const { return column * batch + matrix < count; }
};

/// Scatters one vector per input into g order-n matrices.
inline std::vector<SquareMatrix> scatter_inputs(const std::vector<std::vector<double>>& xs, std::size_t n,
                                                const Placement& place) {
  require(xs.size() == place.count, ErrorCode::dimension, "scatter_inputs: input count differs from placement");
  require(place.columns_needed() <= n, ErrorCode::capacity,
          std::to_string(place.count) + " inputs do not fit " + std::to_string(place.batch) + " matrices of order " +
              std::to_string(n));
  std::vector<SquareMatrix> ms(place.batch, SquareMatrix(n));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i].size() <= n, ErrorCode::dimension, "scatter_inputs: vector longer than matrix order");
    auto& m = ms[place.matrix_of(i)];
    const std::size_t c = place.column_of(i);
    for (std::size_t r = 0; r < xs[i].size(); ++r) m(r, c) = xs[i][r];
  }
  return ms;
}

/// Inverse of scatter_inputs for the first `rows` coordinates.
inline std::vector<std::vector<double>> gather_outputs(std::span<const SquareMatrix> ms, std::size_t rows,
                                                       const Placement& place) {
  require(ms.size() == place.batch, ErrorCode::layout, "gather_outputs: pack size differs from placement");
  std::vector<std::vector<double>> ys(place.count);
  for (std::size_t i = 0; i < place.count; ++i) {
    const auto& m = ms[place.matrix_of(i)];
    require(rows <= m.order() && place.column_of(i) < m.order(), ErrorCode::dimension,
            "gather_outputs: shape exceeds matrix order");
    ys[i].resize(rows);
    for (std::size_t r = 0; r < rows; ++r) ys[i][r] = m(r, place.column_of(i));
  }
  return ys;
}

/// Public description of one linear stage: what the client must know to
/// shape inputs and run the activation.
struct StageShape {
  std::uint32_t rows = 0;   // output dimension
  std::uint32_t cols = 0;   // input dimension
  std::uint32_t order = 0;  // padded square order n
  std::optional<model::Activation> activation;

  friend bool operator==(const StageShape&, const StageShape&) = default;
};

struct Stage {
  model::Linear linear;
  SquareMatrix weights;  // padded to order n
  std::optional<model::Activation> activation;

  std::size_t order() const { return weights.order(); }
  StageShape shape() const {
    return {static_cast<std::uint32_t>(linear.out_dim()), static_cast<std::uint32_t>(linear.in_dim()),
            static_cast<std::uint32_t>(order()), activation};
  }

  /// Bias broadcast into the occupied columns only; a column nobody's input
  /// sits in stays zero so its decryption reveals nothing about b.
  std::vector<SquareMatrix> bias_pack(const Placement& place) const {
    std::vector<SquareMatrix> ms(place.batch, SquareMatrix(order()));
    for (std::size_t t = 0; t < place.batch; ++t)
      for (std::size_t c = 0; c < order(); ++c)
        if (place.occupied(t, c))
          for (std::size_t r = 0; r < linear.out_dim(); ++r) ms[t](r, c) = linear.bias[r];
    return ms;
  }
};

/// W2 (W1 x + b1) + b2 as one layer.
inline model::Linear fuse(const model::Linear& first, const model::Linear& second) {
  require(second.in_dim() == first.out_dim(), ErrorCode::shape, "fuse: dimension mismatch");
  DenseMatrix w(second.out_dim(), first.in_dim());
  std::vector<double> b(second.bias);
  for (std::size_t i = 0; i < second.out_dim(); ++i) {
    for (std::size_t k = 0; k < first.out_dim(); ++k) {
      const double s = second.weights(i, k);
      for (std::size_t j = 0; j < first.in_dim(); ++j) w(i, j) += s * first.weights(k, j);
      b[i] += s * first.bias[k];
    }
  }
  return model::Linear{std::move(w), std::move(b)};
}

struct ExecutionPlan {
  std::size_t input_dim = 0;
  std::vector<Stage> stages;

  std::size_t output_dim() const { return stages.back().linear.out_dim(); }
  std::size_t activation_count() const {
    std::size_t m = 0;
    for (const auto& s : stages) m += s.activation.has_value();
    return m;
  }
  std::vector<StageShape> shapes() const {
    std::vector<StageShape> out;
    for (const auto& s : stages) out.push_back(s.shape());
    return out;
  }
  std::size_t min_order() const {
    std::size_t n = stages.front().order();
    for (const auto& s : stages) n = std::min(n, s.order());
    return n;
  }
};

/// Groups a model into linear stages each followed by at most one
/// activation. Adjacent linear layers are fused, so every activation costs
/// exactly one client round trip.
inline ExecutionPlan make_plan(const model::ModelSpec& spec) {
  const model::ModelSpec m = model::lower(spec);
  model::validate(m);
  require(std::holds_alternative<model::Linear>(m.layers.front()), ErrorCode::shape,
          "the protocol needs a linear layer first; the client would otherwise evaluate an activation on raw input");
  ExecutionPlan plan;
  plan.input_dim = m.input_dim;
  std::optional<model::Linear> pending;
  auto flush = [&](std::optional<model::Activation> act) {
    const auto& lin = *pending;
    SquareMatrix w(std::max(lin.out_dim(), lin.in_dim()));
    for (std::size_t i = 0; i < lin.out_dim(); ++i)
      for (std::size_t j = 0; j < lin.in_dim(); ++j) w(i, j) = lin.weights(i, j);
    plan.stages.push_back(Stage{lin, std::move(w), act});
    pending.reset();
  };
  for (const auto& layer : m.layers) {
    if (auto* lin = std::get_if<model::Linear>(&layer)) {
      pending = pending ? fuse(*pending, *lin) : *lin;
    } else {
      const auto kind = std::get<model::ActivationLayer>(layer).kind;
      require(pending.has_value(), ErrorCode::shape, "consecutive activation layers are not supported");
      flush(kind);
    }
  }
  if (pending) flush(std::nullopt);
  return plan;
}

}  // namespace permhe::protocol

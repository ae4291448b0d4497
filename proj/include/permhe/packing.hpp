// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "permhe/matrix.hpp"

namespace permhe {

/// g matrices of order d packed back to back, each row-major:
/// slot t*d*d + i*d + j holds matrix t entry (i, j).
struct Layout {
  std::uint16_t order = 0;  // d
  std::uint16_t batch = 0;  // g

  std::size_t used() const { return std::size_t{batch} * order * order; }
  friend bool operator==(const Layout&, const Layout&) = default;
};

struct PackedPlaintext {
  std::vector<double> slots;
  Layout layout;

  std::size_t slot_count() const { return slots.size(); }
};

inline Layout make_layout(std::size_t order, std::size_t batch, std::size_t slot_count) {
  require(order > 0 && batch > 0, ErrorCode::layout, "layout needs positive order and batch");
  require(order <= 0xFFFF && batch <= 0xFFFF, ErrorCode::layout, "layout fields exceed 16 bits");
  require(batch * order * order <= slot_count, ErrorCode::capacity,
          std::to_string(batch) + " x " + std::to_string(order) + "^2 values exceed " + std::to_string(slot_count) +
              " slots");
  return Layout{static_cast<std::uint16_t>(order), static_cast<std::uint16_t>(batch)};
}

inline PackedPlaintext encode_batch(std::span<const SquareMatrix> ms, std::size_t slot_count) {
  require(!ms.empty(), ErrorCode::layout, "encode_batch: empty batch");
  const std::size_t d = ms.front().order();
  for (const auto& m : ms)
    require(m.order() == d, ErrorCode::dimension, "encode_batch: matrices of different order");
  PackedPlaintext p{std::vector<double>(slot_count, 0.0), make_layout(d, ms.size(), slot_count)};
  std::size_t at = 0;
  for (const auto& m : ms)
    for (double v : m.entries()) p.slots[at++] = v;
  return p;
}

inline PackedPlaintext encode_matrix(const SquareMatrix& m, std::size_t slot_count) {
  return encode_batch(std::span<const SquareMatrix>(&m, 1), slot_count);
}

inline std::vector<SquareMatrix> decode_batch(const PackedPlaintext& p) {
  const std::size_t d = p.layout.order;
  require(d > 0 && p.layout.batch > 0, ErrorCode::layout, "decode_batch: empty layout");
  require(p.layout.used() <= p.slots.size(), ErrorCode::layout, "decode_batch: layout exceeds slot vector");
  std::vector<SquareMatrix> out;
  out.reserve(p.layout.batch);
  for (std::size_t t = 0; t < p.layout.batch; ++t) {
    auto first = p.slots.begin() + static_cast<std::ptrdiff_t>(t * d * d);
    out.emplace_back(d, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(d * d)));
  }
  return out;
}

inline SquareMatrix decode_matrix(const PackedPlaintext& p) {
  require(p.layout.batch == 1, ErrorCode::layout,
          "decode_matrix: expected a single-matrix layout, got batch " + std::to_string(p.layout.batch));
  return std::move(decode_batch(p).front());
}

}  // namespace permhe

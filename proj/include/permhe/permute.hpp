// SPDX-License-Identifier: Apache-2.0
#pragma once

// Matrix product as a sum of component-wise products of permuted copies:
//
//   W * V = sum_{k=0}^{n-1} phi^k(sigma(W)) (.) psi^k(tau(V))
//
// with every index taken modulo n. These plaintext routines are the exact
// reference for the encrypted linear-layer path.

#include <cstddef>
#include <vector>

#include "permhe/matrix.hpp"

namespace permhe {

/// sigma(A)[i][j] = A[i][i+j]: row i rotated left by i.
inline SquareMatrix sigma(const SquareMatrix& a) {
  const std::size_t n = a.order();
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a(i, (i + j) % n);
  return out;
}

/// tau(A)[i][j] = A[i+j][j]: column j rotated up by j.
inline SquareMatrix tau(const SquareMatrix& a) {
  const std::size_t n = a.order();
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a((i + j) % n, j);
  return out;
}

/// k column shifts: out[i][j] = A[i][j+k].
inline SquareMatrix phi(const SquareMatrix& a, std::size_t k) {
  const std::size_t n = a.order();
  k %= n;
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a(i, (j + k) % n);
  return out;
}

/// k row shifts: out[i][j] = A[i+k][j].
inline SquareMatrix psi(const SquareMatrix& a, std::size_t k) {
  const std::size_t n = a.order();
  k %= n;
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a((i + k) % n, j);
  return out;
}

/// The n permuted copies of one operand, indexed by shift count k.
struct PermutedSet {
  std::vector<SquareMatrix> matrices;

  std::size_t base_order() const { return matrices.empty() ? 0 : matrices.front().order(); }
  std::size_t size() const { return matrices.size(); }
  const SquareMatrix& operator[](std::size_t k) const { return matrices[k]; }
};

inline PermutedSet permut_weights(const SquareMatrix& w) {
  const std::size_t n = w.order();
  const SquareMatrix s = sigma(w);
  PermutedSet set;
  set.matrices.reserve(n);
  for (std::size_t k = 0; k < n; ++k) set.matrices.push_back(phi(s, k));
  return set;
}

inline PermutedSet permut_input(const SquareMatrix& v) {
  const std::size_t n = v.order();
  const SquareMatrix t = tau(v);
  PermutedSet set;
  set.matrices.reserve(n);
  for (std::size_t k = 0; k < n; ++k) set.matrices.push_back(psi(t, k));
  return set;
}

inline SquareMatrix hadamard(const SquareMatrix& a, const SquareMatrix& b) {
  require(a.order() == b.order(), ErrorCode::dimension, "hadamard: order mismatch");
  const std::size_t n = a.order();
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a(i, j) * b(i, j);
  return out;
}

/// Accumulates the component-wise products in k order, O_0 + O_1 + ...,
/// which is the same summation order the encrypted path uses.
inline SquareMatrix permuted_matmul(const SquareMatrix& w, const SquareMatrix& v) {
  require(w.order() == v.order(), ErrorCode::dimension,
          "permuted_matmul: order " + std::to_string(w.order()) + " vs " + std::to_string(v.order()));
  const PermutedSet ws = permut_weights(w);
  const PermutedSet vs = permut_input(v);
  SquareMatrix acc = hadamard(ws[0], vs[0]);
  const std::size_t n = w.order();
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) acc(i, j) += ws[k](i, j) * vs[k](i, j);
  }
  return acc;
}

inline SquareMatrix naive_matmul(const SquareMatrix& w, const SquareMatrix& v) {
  require(w.order() == v.order(), ErrorCode::dimension,
          "naive_matmul: order " + std::to_string(w.order()) + " vs " + std::to_string(v.order()));
  const std::size_t n = w.order();
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < n; ++l) s += w(i, l) * v(l, j);
      out(i, j) = s;
    }
  return out;
}

}  // namespace permhe

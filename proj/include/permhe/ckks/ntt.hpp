// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "permhe/ckks/modarith.hpp"

namespace permhe::ckks {

/// Negacyclic NTT over Z_q[X]/(X^N + 1): Cooley-Tukey forward and
/// Gentleman-Sande inverse with powers of a primitive 2N-th root stored
/// in bit-reversed order. Evaluation-domain values come out bit-reversed,
/// which is fine for point-wise products.
class NttTable {
 public:
  NttTable(const Modulus& q, std::size_t ring_dim) : q_(q), n_(ring_dim) {
    require(std::has_single_bit(ring_dim) && ring_dim >= 2, ErrorCode::params, "ring_dim must be a power of two");
    const int log_n = std::countr_zero(ring_dim);
    const u64 psi = primitive_root_2n(q, ring_dim);
    const u64 psi_inv = q.inv(psi);
    psi_rev_.resize(n_);
    psi_inv_rev_.resize(n_);
    psi_rev_shoup_.resize(n_);
    psi_inv_rev_shoup_.resize(n_);
    u64 p = 1, pi = 1;
    std::vector<u64> pows(n_), inv_pows(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      pows[i] = p;
      inv_pows[i] = pi;
      p = q.mul(p, psi);
      pi = q.mul(pi, psi_inv);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t r = bit_reverse(i, log_n);
      psi_rev_[i] = pows[r];
      psi_inv_rev_[i] = inv_pows[r];
      psi_rev_shoup_[i] = q.shoup(psi_rev_[i]);
      psi_inv_rev_shoup_[i] = q.shoup(psi_inv_rev_[i]);
    }
    n_inv_ = q.inv(static_cast<u64>(n_));
    n_inv_shoup_ = q.shoup(n_inv_);
  }

  const Modulus& modulus() const { return q_; }
  std::size_t ring_dim() const { return n_; }

  void forward(std::span<u64> a) const {
    std::size_t t = n_;
    for (std::size_t m = 1; m < n_; m <<= 1) {
      t >>= 1;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j1 = 2 * i * t;
        const u64 w = psi_rev_[m + i];
        const u64 ws = psi_rev_shoup_[m + i];
        for (std::size_t j = j1; j < j1 + t; ++j) {
          const u64 u = a[j];
          const u64 v = q_.mul_shoup(a[j + t], w, ws);
          a[j] = q_.add(u, v);
          a[j + t] = q_.sub(u, v);
        }
      }
    }
  }

  void inverse(std::span<u64> a) const {
    std::size_t t = 1;
    for (std::size_t m = n_; m > 1; m >>= 1) {
      const std::size_t h = m >> 1;
      std::size_t j1 = 0;
      for (std::size_t i = 0; i < h; ++i) {
        const u64 w = psi_inv_rev_[h + i];
        const u64 ws = psi_inv_rev_shoup_[h + i];
        for (std::size_t j = j1; j < j1 + t; ++j) {
          const u64 u = a[j];
          const u64 v = a[j + t];
          a[j] = q_.add(u, v);
          a[j + t] = q_.mul_shoup(q_.sub(u, v), w, ws);
        }
        j1 += 2 * t;
      }
      t <<= 1;
    }
    for (auto& x : a) x = q_.mul_shoup(x, n_inv_, n_inv_shoup_);
  }

 private:
  static std::size_t bit_reverse(std::size_t x, int bits) {
    std::size_t r = 0;
    for (int i = 0; i < bits; ++i) r |= ((x >> i) & 1) << (bits - 1 - i);
    return r;
  }

  Modulus q_;
  std::size_t n_;
  std::vector<u64> psi_rev_, psi_inv_rev_, psi_rev_shoup_, psi_inv_rev_shoup_;
  u64 n_inv_ = 0, n_inv_shoup_ = 0;
};

/// Ring dimension plus the modulus chain q_0 > ... > q_L and their tables.
/// Immutable after construction.
class RnsContext {
 public:
  RnsContext(std::size_t ring_dim, std::vector<u64> primes) : n_(ring_dim) {
    for (std::size_t i = 0; i < primes.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        require(primes[i] != primes[j], ErrorCode::params, "modulus chain primes must be distinct");
    for (u64 p : primes) {
      require(is_prime(p), ErrorCode::params, "modulus chain entry is not prime");
      moduli_.emplace_back(p);
      tables_.emplace_back(moduli_.back(), ring_dim);
    }
  }

  std::size_t ring_dim() const { return n_; }
  std::size_t size() const { return moduli_.size(); }
  const Modulus& modulus(std::size_t i) const { return moduli_[i]; }
  const NttTable& table(std::size_t i) const { return tables_[i]; }

 private:
  std::size_t n_;
  std::vector<Modulus> moduli_;
  std::vector<NttTable> tables_;
};

enum class Domain : std::uint8_t { coefficient, evaluation };

/// Polynomial in residue form over the first `moduli` primes of a chain:
/// residues for prime i occupy [i*N, (i+1)*N).
struct RingElement {
  std::size_t ring_dim = 0;
  std::size_t moduli = 0;
  Domain domain = Domain::coefficient;
  std::vector<u64> data;

  RingElement() = default;
  RingElement(std::size_t n, std::size_t count, Domain d) : ring_dim(n), moduli(count), domain(d), data(n * count, 0) {}

  std::span<u64> residues(std::size_t i) { return std::span<u64>(data).subspan(i * ring_dim, ring_dim); }
  std::span<const u64> residues(std::size_t i) const {
    return std::span<const u64>(data).subspan(i * ring_dim, ring_dim);
  }

  friend bool operator==(const RingElement&, const RingElement&) = default;
};

inline RingElement ntt_forward(const RnsContext& ctx, RingElement r) {
  require(r.domain == Domain::coefficient, ErrorCode::format, "ntt_forward: element already in evaluation domain");
  for (std::size_t i = 0; i < r.moduli; ++i) ctx.table(i).forward(r.residues(i));
  r.domain = Domain::evaluation;
  return r;
}

inline RingElement ntt_inverse(const RnsContext& ctx, RingElement r) {
  require(r.domain == Domain::evaluation, ErrorCode::format, "ntt_inverse: element already in coefficient domain");
  for (std::size_t i = 0; i < r.moduli; ++i) ctx.table(i).inverse(r.residues(i));
  r.domain = Domain::coefficient;
  return r;
}

/// Reduces signed integer coefficients into every residue of a new element.
inline RingElement from_signed(const RnsContext& ctx, std::span<const i128> coeffs, std::size_t moduli) {
  RingElement r(ctx.ring_dim(), moduli, Domain::coefficient);
  for (std::size_t i = 0; i < moduli; ++i) {
    const auto& q = ctx.modulus(i);
    auto res = r.residues(i);
    for (std::size_t j = 0; j < coeffs.size(); ++j) res[j] = q.from_signed(coeffs[j]);
  }
  return r;
}

inline void add_inplace(const RnsContext& ctx, RingElement& a, const RingElement& b) {
  require(a.domain == b.domain && a.moduli <= b.moduli, ErrorCode::format, "ring add: incompatible operands");
  for (std::size_t i = 0; i < a.moduli; ++i) {
    const auto& q = ctx.modulus(i);
    auto x = a.residues(i);
    auto y = b.residues(i);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = q.add(x[j], y[j]);
  }
}

inline void mul_inplace(const RnsContext& ctx, RingElement& a, const RingElement& b) {
  require(a.domain == Domain::evaluation && b.domain == Domain::evaluation && a.moduli <= b.moduli, ErrorCode::format,
          "ring mul: operands must be in evaluation domain");
  for (std::size_t i = 0; i < a.moduli; ++i) {
    const auto& q = ctx.modulus(i);
    auto x = a.residues(i);
    auto y = b.residues(i);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = q.mul(x[j], y[j]);
  }
}

}  // namespace permhe::ckks

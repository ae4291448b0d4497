// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "permhe/error.hpp"

namespace permhe::ckks {

using u64 = std::uint64_t;
using u128 = unsigned __int128;
using i128 = __int128;

inline u64 mulhi64(u64 a, u64 b) { return static_cast<u64>((u128{a} * b) >> 64); }

/// Prime modulus q < 2^62 with a precomputed Barrett ratio floor(2^128 / q).
class Modulus {
 public:
  Modulus() = default;
  explicit Modulus(u64 q) : q_(q) {
    require(q > 1 && q < (u64{1} << 62), ErrorCode::params, "modulus out of range");
    // floor(2^128 / q) = floor((2^128 - 1) / q) since q is not a power of two.
    const u128 ratio = ~u128{0} / q;
    ratio_hi_ = static_cast<u64>(ratio >> 64);
    ratio_lo_ = static_cast<u64>(ratio);
  }

  u64 value() const { return q_; }

  /// x mod q for x < q^2 (any x < 2^124 works).
  u64 reduce(u128 x) const {
    const u64 x_lo = static_cast<u64>(x);
    const u64 x_hi = static_cast<u64>(x >> 64);
    // high 128 bits of x * ratio, of which only the low word is needed
    const u128 mid = u128{mulhi64(x_lo, ratio_lo_)} + static_cast<u64>(u128{x_lo} * ratio_hi_) +
                     static_cast<u64>(u128{x_hi} * ratio_lo_);
    const u64 quot = x_hi * ratio_hi_ + mulhi64(x_lo, ratio_hi_) + mulhi64(x_hi, ratio_lo_) +
                     static_cast<u64>(mid >> 64);
    u64 r = x_lo - quot * q_;
    while (r >= q_) r -= q_;
    return r;
  }

  u64 reduce(u64 x) const { return x >= q_ ? x % q_ : x; }

  /// Centered signed value to [0, q).
  u64 from_signed(i128 x) const {
    const i128 q = static_cast<i128>(q_);
    i128 r = x % q;
    if (r < 0) r += q;
    return static_cast<u64>(r);
  }

  u64 add(u64 a, u64 b) const {
    const u64 s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + q_ - b; }
  u64 neg(u64 a) const { return a == 0 ? 0 : q_ - a; }
  u64 mul(u64 a, u64 b) const { return reduce(u128{a} * b); }

  u64 pow(u64 base, u64 e) const {
    u64 r = 1 % q_;
    base %= q_;
    while (e) {
      if (e & 1) r = mul(r, base);
      base = mul(base, base);
      e >>= 1;
    }
    return r;
  }
  u64 inv(u64 a) const {
    require(a % q_ != 0, ErrorCode::params, "zero has no inverse");
    return pow(a, q_ - 2);
  }

  /// Shoup precomputation floor(w * 2^64 / q) for repeated multiplication by w.
  u64 shoup(u64 w) const { return static_cast<u64>((u128{w} << 64) / q_); }
  u64 mul_shoup(u64 a, u64 w, u64 w_shoup) const {
    const u64 quot = mulhi64(a, w_shoup);
    u64 r = a * w - quot * q_;
    return r >= q_ ? r - q_ : r;
  }

  friend bool operator==(const Modulus& a, const Modulus& b) { return a.q_ == b.q_; }

 private:
  u64 q_ = 0;
  u64 ratio_hi_ = 0;
  u64 ratio_lo_ = 0;
};

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  auto mulmod = [n](u64 a, u64 b) { return static_cast<u64>(u128{a} * b % n); };
  auto powmod = [&](u64 b, u64 e) {
    u64 r = 1;
    while (e) {
      if (e & 1) r = mulmod(r, b);
      b = mulmod(b, b);
      e >>= 1;
    }
    return r;
  };
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = powmod(a, d);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// The `count` largest distinct primes below 2^bits with q = 1 (mod 2N),
/// in descending order.
inline std::vector<u64> ntt_primes(unsigned bits, std::size_t count, std::size_t ring_dim) {
  const u64 step = 2 * static_cast<u64>(ring_dim);
  const u64 top = u64{1} << bits;
  u64 candidate = (top - 1) / step * step + 1;
  if (candidate >= top) candidate -= step;
  std::vector<u64> out;
  while (out.size() < count) {
    require(candidate > step, ErrorCode::params, "ran out of NTT-friendly primes below 2^" + std::to_string(bits));
    if (is_prime(candidate)) out.push_back(candidate);
    candidate -= step;
  }
  return out;
}

/// A primitive 2N-th root of unity mod q, smallest generator-derived one.
inline u64 primitive_root_2n(const Modulus& q, std::size_t ring_dim) {
  const u64 two_n = 2 * static_cast<u64>(ring_dim);
  require((q.value() - 1) % two_n == 0, ErrorCode::params, "modulus is not NTT friendly for this ring");
  for (u64 x = 2; x < q.value(); ++x) {
    const u64 r = q.pow(x, (q.value() - 1) / two_n);
    // order exactly 2N iff r^N == -1
    if (q.pow(r, ring_dim) == q.value() - 1) return r;
  }
  throw Error(ErrorCode::params, "no primitive 2N-th root found");
}

}  // namespace permhe::ckks

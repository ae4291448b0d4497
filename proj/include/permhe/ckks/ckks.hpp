// SPDX-License-Identifier: Apache-2.0
#pragma once

// Desk-scale leveled approximate RLWE scheme. Public-key encryption, slot
// addition, plaintext multiplication and rescaling only; no rotation,
// relinearization or bootstrapping. Parameters are NOT security audited.

#include <cmath>
#include <memory>
#include <vector>

#include "permhe/ckks/encoder.hpp"
#include "permhe/ckks/ntt.hpp"
#include "permhe/he/backend.hpp"

namespace permhe::ckks {

namespace sample {

inline std::vector<i128> hamming_ternary(Prng& rng, std::size_t n, std::size_t weight) {
  std::vector<i128> out(n, 0);
  std::size_t placed = 0;
  while (placed < weight) {
    const auto pos = rng.below(n);
    if (out[pos] != 0) continue;
    out[pos] = (rng() & 1) ? 1 : -1;
    ++placed;
  }
  return out;
}

/// Rounded continuous Gaussian, the usual stand-in for a centered
/// discrete Gaussian.
inline std::vector<i128> gaussian(Prng& rng, std::size_t n, double sigma) {
  std::vector<i128> out(n);
  for (auto& v : out) v = static_cast<i128>(std::llround(sigma * rng.gaussian()));
  return out;
}

inline RingElement uniform_eval(Prng& rng, const RnsContext& ctx, std::size_t moduli) {
  RingElement r(ctx.ring_dim(), moduli, Domain::evaluation);
  for (std::size_t i = 0; i < moduli; ++i) {
    const u64 q = ctx.modulus(i).value();
    for (auto& x : r.residues(i)) x = rng.below(q);
  }
  return r;
}

}  // namespace sample

class CkksBackend {
 public:
  struct PublicKey {
    std::uint64_t fingerprint = 0;
    RingElement b, a;
  };
  struct SecretKey {
    std::uint64_t fingerprint = 0;
    RingElement s;
  };
  struct Ciphertext {
    RingElement c0, c1;
    Layout layout;
    std::uint32_t level = 0;
    double scale = 1.0;
    std::uint64_t fingerprint = 0;
  };
  struct MulOperand {
    RingElement poly;
    Layout layout;
    std::uint32_t level = 0;
    double scale = 1.0;
  };
  struct AddOperand {
    RingElement poly;
    Layout layout;
    std::uint32_t level = 0;
    double scale = 1.0;
  };

  explicit CkksBackend(he::HEParams params) : params_(params) {
    params_.validate();
    require(params_.scheme == he::SchemeId::ckks_lite, ErrorCode::params, "CkksBackend needs ckks_lite params");
    fingerprint_ = params_.fingerprint();
    const auto& c = params_.ckks;
    auto primes = ntt_primes(c.prime_bits, params_.multiplicative_depth + 1, c.ring_dim);
    shared_ = std::make_shared<const Shared>(c.ring_dim, std::move(primes), std::ldexp(1.0, static_cast<int>(c.scale_bits)));
  }

  const he::HEParams& params() const { return params_; }
  const RnsContext& context() const { return shared_->rns; }
  const CanonicalEncoder& encoder() const { return shared_->encoder; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::uint32_t fresh_level() const { return params_.multiplicative_depth; }
  double fresh_scale() const { return shared_->delta; }
  std::size_t ring_dim() const { return params_.ckks.ring_dim; }

  he::KeyPair<PublicKey, SecretKey> keygen(Prng& rng) const {
    const auto& ctx = context();
    const std::size_t top = fresh_level() + 1;
    const std::size_t n = ring_dim();
    RingElement s = ntt_forward(ctx, from_signed(ctx, sample::hamming_ternary(rng, n, params_.ckks.secret_hamming_weight), top));
    RingElement a = sample::uniform_eval(rng, ctx, top);
    RingElement e = ntt_forward(ctx, from_signed(ctx, sample::gaussian(rng, n, params_.ckks.sigma), top));
    // b = e - a*s
    RingElement b = a;
    mul_inplace(ctx, b, s);
    negate_inplace(b);
    add_inplace(ctx, b, e);
    return {PublicKey{fingerprint_, std::move(b), std::move(a)}, SecretKey{fingerprint_, std::move(s)}};
  }

  Ciphertext encrypt(const PublicKey& pk, const PackedPlaintext& p, Prng& rng) const {
    require(pk.fingerprint == fingerprint_, ErrorCode::fingerprint, "public key from different parameters");
    check_plain(p);
    const auto& ctx = context();
    const std::size_t top = fresh_level() + 1;
    const std::size_t n = ring_dim();
    RingElement m = encode_poly(p.slots, fresh_scale(), top);
    // Sparse ephemeral: the dense choice puts fresh slot error above
    // epsilon at 2^30 (slot noise is a product of two Gaussians, so the
    // tails are heavy).
    RingElement u = ntt_forward(
        ctx, from_signed(ctx, sample::hamming_ternary(rng, n, params_.ckks.secret_hamming_weight), top));
    RingElement e0 = ntt_forward(ctx, from_signed(ctx, sample::gaussian(rng, n, params_.ckks.sigma), top));
    RingElement e1 = ntt_forward(ctx, from_signed(ctx, sample::gaussian(rng, n, params_.ckks.sigma), top));
    Ciphertext c;
    c.c0 = pk.b;
    mul_inplace(ctx, c.c0, u);
    add_inplace(ctx, c.c0, e0);
    add_inplace(ctx, c.c0, m);
    c.c1 = pk.a;
    mul_inplace(ctx, c.c1, u);
    add_inplace(ctx, c.c1, e1);
    c.layout = p.layout;
    c.level = fresh_level();
    c.scale = fresh_scale();
    c.fingerprint = fingerprint_;
    return c;
  }

  /// Uses only the q_0 residue: the message polynomial stays below q_0 / 2
  /// in magnitude, so its residue mod q_0 determines it at every level.
  PackedPlaintext decrypt(const SecretKey& sk, const Ciphertext& c) const {
    require(sk.fingerprint == fingerprint_ && c.fingerprint == fingerprint_, ErrorCode::fingerprint,
            "decrypt: fingerprint mismatch");
    const auto& ctx = context();
    const auto& q0 = ctx.modulus(0);
    const std::size_t n = ring_dim();
    std::vector<u64> t(n);
    auto c0 = c.c0.residues(0);
    auto c1 = c.c1.residues(0);
    auto s = sk.s.residues(0);
    for (std::size_t j = 0; j < n; ++j) t[j] = q0.add(c0[j], q0.mul(c1[j], s[j]));
    ctx.table(0).inverse(t);
    std::vector<double> coeffs(n);
    const u64 half = q0.value() / 2;
    for (std::size_t j = 0; j < n; ++j)
      coeffs[j] = t[j] > half ? -static_cast<double>(q0.value() - t[j]) : static_cast<double>(t[j]);
    return PackedPlaintext{encoder().decode(coeffs, c.scale), c.layout};
  }

  Ciphertext add_ct(const Ciphertext& a, const Ciphertext& b) const {
    check_ct(a);
    check_ct(b);
    require(a.level == b.level, ErrorCode::level, "add_ct: level mismatch");
    require(a.scale == b.scale, ErrorCode::scale, "add_ct: scale mismatch");
    require(a.layout == b.layout, ErrorCode::layout, "add_ct: layout mismatch");
    Ciphertext out = a;
    add_inplace(context(), out.c0, b.c0);
    add_inplace(context(), out.c1, b.c1);
    return out;
  }

  AddOperand encode_add_operand(const PackedPlaintext& p, std::uint32_t level, double scale) const {
    check_plain(p);
    require(level <= fresh_level(), ErrorCode::level, "operand level above chain length");
    return AddOperand{encode_poly(p.slots, scale, level + 1), p.layout, level, scale};
  }

  /// Encoded at scale q_level, so the rescale that follows the product
  /// restores the ciphertext's scale.
  MulOperand encode_mul_operand(const PackedPlaintext& p, std::uint32_t level) const {
    check_plain(p);
    require(level >= 1 && level <= fresh_level(), ErrorCode::level, "no rescale prime available at this level");
    const double scale = static_cast<double>(context().modulus(level).value());
    return MulOperand{encode_poly(p.slots, scale, level + 1), p.layout, level, scale};
  }

  Ciphertext add_pt(const Ciphertext& c, const AddOperand& p) const {
    check_ct(c);
    require(p.level == c.level, ErrorCode::level, "add_pt: operand encoded for another level");
    require(p.scale == c.scale, ErrorCode::scale, "add_pt: operand encoded at another scale");
    require(p.layout == c.layout, ErrorCode::layout, "add_pt: layout mismatch");
    Ciphertext out = c;
    add_inplace(context(), out.c0, p.poly);
    return out;
  }
  Ciphertext add_pt(const Ciphertext& c, const PackedPlaintext& p) const {
    return add_pt(c, encode_add_operand(p, c.level, c.scale));
  }

  Ciphertext mul_pt(const Ciphertext& c, const MulOperand& p) const {
    check_ct(c);
    require(c.level >= 1, ErrorCode::level, "mul_pt: ciphertext has no levels left");
    require(p.level == c.level, ErrorCode::level, "mul_pt: operand encoded for another level");
    require(p.layout == c.layout, ErrorCode::layout, "mul_pt: layout mismatch");
    Ciphertext out = c;
    mul_inplace(context(), out.c0, p.poly);
    mul_inplace(context(), out.c1, p.poly);
    const double q_last = static_cast<double>(context().modulus(c.level).value());
    rescale_inplace(out.c0);
    rescale_inplace(out.c1);
    out.level = c.level - 1;
    out.scale = c.scale * p.scale / q_last;
    return out;
  }
  Ciphertext mul_pt(const Ciphertext& c, const PackedPlaintext& p) const { return mul_pt(c, encode_mul_operand(p, c.level)); }

  /// Divides by the last prime of the element's chain with rounding and
  /// drops that residue.
  void rescale_inplace(RingElement& r) const {
    require(r.moduli >= 2, ErrorCode::level, "modulus switch on level 0");
    require(r.domain == Domain::evaluation, ErrorCode::format, "rescale expects evaluation domain");
    const auto& ctx = context();
    const std::size_t n = ring_dim();
    const std::size_t last = r.moduli - 1;
    const auto& ql = ctx.modulus(last);
    std::vector<u64> top(r.residues(last).begin(), r.residues(last).end());
    ctx.table(last).inverse(top);
    const u64 half = ql.value() / 2;
    std::vector<u64> tmp(n);
    for (std::size_t i = 0; i < last; ++i) {
      const auto& qi = ctx.modulus(i);
      for (std::size_t j = 0; j < n; ++j) {
        // centered representative of the dropped residue, reduced mod q_i
        tmp[j] = top[j] > half ? qi.sub(0, qi.reduce(ql.value() - top[j])) : qi.reduce(top[j]);
      }
      ctx.table(i).forward(tmp);
      const u64 inv = shared_->inv_last[last][i];
      const u64 inv_shoup = qi.shoup(inv);
      auto x = r.residues(i);
      for (std::size_t j = 0; j < n; ++j) x[j] = qi.mul_shoup(qi.sub(x[j], tmp[j]), inv, inv_shoup);
    }
    r.data.resize(last * n);
    r.moduli = last;
  }

  std::size_t serialized_size(const Ciphertext& c) const {
    return he::kCiphertextHeaderBytes + 2 * 8 * ring_dim() * (std::size_t{c.level} + 1);
  }

  /// Header, then c0 residues for q_0..q_level, then c1 likewise; 8-byte
  /// little-endian words in evaluation-domain order.
  void serialize(const Ciphertext& c, ByteWriter& w) const {
    he::detail::write_ct_header(w, he::SchemeId::ckks_lite, c.layout, c.level, c.scale, c.fingerprint);
    w.u64_array(c.c0.data);
    w.u64_array(c.c1.data);
  }

  Ciphertext deserialize_ciphertext(ByteReader& r) const {
    const auto h = he::detail::read_ct_header(r, he::SchemeId::ckks_lite, fingerprint_);
    require(h.level <= fresh_level(), ErrorCode::format, "ciphertext level above chain length");
    require(h.layout.used() <= params_.slot_count, ErrorCode::format, "ciphertext layout exceeds slot count");
    Ciphertext c;
    c.layout = h.layout;
    c.level = h.level;
    c.scale = h.scale;
    c.fingerprint = fingerprint_;
    c.c0 = read_element(r, h.level + 1);
    c.c1 = read_element(r, h.level + 1);
    return c;
  }

  void serialize_public_key(const PublicKey& pk, ByteWriter& w) const {
    w.u8(static_cast<std::uint8_t>(he::SchemeId::ckks_lite));
    w.u8(he::kCiphertextVersion);
    w.u64(pk.fingerprint);
    w.u64_array(pk.b.data);
    w.u64_array(pk.a.data);
  }

  PublicKey deserialize_public_key(ByteReader& r) const {
    require(r.u8() == static_cast<std::uint8_t>(he::SchemeId::ckks_lite), ErrorCode::format, "public key scheme mismatch");
    require(r.u8() == he::kCiphertextVersion, ErrorCode::version, "public key version mismatch");
    PublicKey pk;
    pk.fingerprint = r.u64();
    require(pk.fingerprint == fingerprint_, ErrorCode::fingerprint, "public key from different parameters");
    pk.b = read_element(r, fresh_level() + 1);
    pk.a = read_element(r, fresh_level() + 1);
    return pk;
  }

  /// Encoded polynomial of `values` at `scale` over the first `moduli`
  /// primes, in evaluation domain.
  RingElement encode_poly(std::span<const double> values, double scale, std::size_t moduli) const {
    const auto coeffs = encoder().encode(values, scale);
    return ntt_forward(context(), from_signed(context(), coeffs, moduli));
  }

 private:
  struct Shared {
    Shared(std::size_t n, std::vector<u64> primes, double d) : rns(n, std::move(primes)), encoder(n), delta(d) {
      inv_last.resize(rns.size());
      for (std::size_t l = 1; l < rns.size(); ++l)
        for (std::size_t i = 0; i < l; ++i)
          inv_last[l].push_back(rns.modulus(i).inv(rns.modulus(i).reduce(rns.modulus(l).value())));
    }
    RnsContext rns;
    CanonicalEncoder encoder;
    double delta;
    std::vector<std::vector<u64>> inv_last;  // [l][i] = q_l^{-1} mod q_i
  };

  RingElement read_element(ByteReader& r, std::size_t moduli) const {
    RingElement e(ring_dim(), moduli, Domain::evaluation);
    r.u64_array(e.data);
    const auto& ctx = context();
    for (std::size_t i = 0; i < moduli; ++i)
      for (u64 x : e.residues(i))
        require(x < ctx.modulus(i).value(), ErrorCode::format, "residue out of range");
    return e;
  }

  void negate_inplace(RingElement& r) const {
    for (std::size_t i = 0; i < r.moduli; ++i) {
      const auto& q = context().modulus(i);
      for (auto& x : r.residues(i)) x = q.neg(x);
    }
  }

  void check_plain(const PackedPlaintext& p) const {
    require(p.slots.size() == params_.slot_count, ErrorCode::layout,
            "plaintext has " + std::to_string(p.slots.size()) + " slots, params declare " +
                std::to_string(params_.slot_count));
    require(p.layout.used() <= params_.slot_count, ErrorCode::capacity, "layout exceeds slot count");
  }
  void check_ct(const Ciphertext& c) const {
    require(c.fingerprint == fingerprint_, ErrorCode::fingerprint, "ciphertext from different parameters");
  }

  he::HEParams params_;
  std::uint64_t fingerprint_ = 0;
  std::shared_ptr<const Shared> shared_;
};

static_assert(he::Backend<CkksBackend>);

/// Plaintext encoding entry points used directly by tests and tooling.
inline RingElement cano_encode(const CkksBackend& be, const PackedPlaintext& v, double scale) {
  return from_signed(be.context(), be.encoder().encode(v.slots, scale), be.fresh_level() + 1);
}

inline PackedPlaintext cano_decode(const CkksBackend& be, const RingElement& r, double scale, Layout layout = {}) {
  require(r.domain == Domain::coefficient, ErrorCode::format, "cano_decode expects coefficient domain");
  const auto& q0 = be.context().modulus(0);
  const u64 half = q0.value() / 2;
  std::vector<double> coeffs(be.ring_dim());
  auto res = r.residues(0);
  for (std::size_t j = 0; j < coeffs.size(); ++j)
    coeffs[j] = res[j] > half ? -static_cast<double>(q0.value() - res[j]) : static_cast<double>(res[j]);
  return PackedPlaintext{be.encoder().decode(coeffs, scale), layout};
}

}  // namespace permhe::ckks

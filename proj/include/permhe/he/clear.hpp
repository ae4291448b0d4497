// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "permhe/he/backend.hpp"

namespace permhe::he {

/// Transparent backend: ciphertexts hold the plaintext slots verbatim,
/// tagged with the params fingerprint and a random nonce. Arithmetic is
/// exact IEEE double, which makes protocol logic, transcripts and byte
/// accounting testable without noise. Provides no confidentiality.
///
/// Payload after the common header: u64 nonce, then slot_count f64 words.
class ClearBackend {
 public:
  struct PublicKey {
    std::uint64_t fingerprint = 0;
    std::uint64_t key_id = 0;
  };
  struct SecretKey {
    std::uint64_t fingerprint = 0;
    std::uint64_t key_id = 0;
  };
  struct Ciphertext {
    std::vector<double> slots;
    Layout layout;
    std::uint32_t level = 0;
    double scale = 1.0;
    std::uint64_t fingerprint = 0;
    std::uint64_t nonce = 0;
  };
  struct MulOperand {
    PackedPlaintext plain;
    std::uint32_t level = 0;
  };
  struct AddOperand {
    PackedPlaintext plain;
    std::uint32_t level = 0;
  };

  explicit ClearBackend(HEParams params) : params_(params), fingerprint_(params.fingerprint()) {
    params_.validate();
    require(params_.scheme == SchemeId::clear, ErrorCode::params, "ClearBackend needs clear params");
  }

  const HEParams& params() const { return params_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::uint32_t fresh_level() const { return params_.multiplicative_depth; }
  double fresh_scale() const { return 1.0; }

  KeyPair<PublicKey, SecretKey> keygen(Prng& rng) const {
    const std::uint64_t id = rng();
    return {PublicKey{fingerprint_, id}, SecretKey{fingerprint_, id}};
  }

  Ciphertext encrypt(const PublicKey& pk, const PackedPlaintext& p, Prng& rng) const {
    require(pk.fingerprint == fingerprint_, ErrorCode::fingerprint, "public key from different parameters");
    check_plain(p);
    return Ciphertext{p.slots, p.layout, fresh_level(), 1.0, fingerprint_, rng()};
  }

  PackedPlaintext decrypt(const SecretKey& sk, const Ciphertext& c) const {
    require(sk.fingerprint == fingerprint_ && c.fingerprint == fingerprint_, ErrorCode::fingerprint,
            "decrypt: fingerprint mismatch");
    return PackedPlaintext{c.slots, c.layout};
  }

  Ciphertext add_ct(const Ciphertext& a, const Ciphertext& b) const {
    check_ct(a);
    check_ct(b);
    require(a.level == b.level, ErrorCode::level, "add_ct: level mismatch");
    require(a.scale == b.scale, ErrorCode::scale, "add_ct: scale mismatch");
    require(a.layout == b.layout, ErrorCode::layout, "add_ct: layout mismatch");
    Ciphertext out = a;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] += b.slots[i];
    return out;
  }

  AddOperand encode_add_operand(const PackedPlaintext& p, std::uint32_t level, double /*scale*/) const {
    check_plain(p);
    return AddOperand{p, level};
  }
  MulOperand encode_mul_operand(const PackedPlaintext& p, std::uint32_t level) const {
    check_plain(p);
    return MulOperand{p, level};
  }

  Ciphertext add_pt(const Ciphertext& c, const AddOperand& p) const {
    check_ct(c);
    require(p.level == c.level, ErrorCode::level, "add_pt: operand encoded for another level");
    require(p.plain.layout == c.layout, ErrorCode::layout, "add_pt: layout mismatch");
    Ciphertext out = c;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] += p.plain.slots[i];
    return out;
  }
  Ciphertext add_pt(const Ciphertext& c, const PackedPlaintext& p) const {
    return add_pt(c, encode_add_operand(p, c.level, c.scale));
  }

  Ciphertext mul_pt(const Ciphertext& c, const MulOperand& p) const {
    check_ct(c);
    require(c.level >= 1, ErrorCode::level, "mul_pt: ciphertext has no levels left");
    require(p.level == c.level, ErrorCode::level, "mul_pt: operand encoded for another level");
    require(p.plain.layout == c.layout, ErrorCode::layout, "mul_pt: layout mismatch");
    Ciphertext out = c;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] *= p.plain.slots[i];
    out.level = c.level - 1;
    return out;
  }
  Ciphertext mul_pt(const Ciphertext& c, const PackedPlaintext& p) const {
    return mul_pt(c, encode_mul_operand(p, c.level));
  }

  std::size_t serialized_size(const Ciphertext& c) const { return kCiphertextHeaderBytes + 8 + 8 * c.slots.size(); }

  void serialize(const Ciphertext& c, ByteWriter& w) const {
    detail::write_ct_header(w, SchemeId::clear, c.layout, c.level, c.scale, c.fingerprint);
    w.u64(c.nonce);
    for (double v : c.slots) w.f64(v);
  }

  Ciphertext deserialize_ciphertext(ByteReader& r) const {
    const auto h = detail::read_ct_header(r, SchemeId::clear, fingerprint_);
    Ciphertext c;
    c.layout = h.layout;
    c.level = h.level;
    c.scale = h.scale;
    c.fingerprint = fingerprint_;
    c.nonce = r.u64();
    c.slots.resize(params_.slot_count);
    for (auto& v : c.slots) v = r.f64();
    require(c.level <= fresh_level(), ErrorCode::format, "ciphertext level above fresh level");
    require(c.layout.used() <= params_.slot_count, ErrorCode::format, "ciphertext layout exceeds slot count");
    return c;
  }

  void serialize_public_key(const PublicKey& pk, ByteWriter& w) const {
    w.u8(static_cast<std::uint8_t>(SchemeId::clear));
    w.u8(kCiphertextVersion);
    w.u64(pk.fingerprint);
    w.u64(pk.key_id);
  }
  PublicKey deserialize_public_key(ByteReader& r) const {
    require(r.u8() == static_cast<std::uint8_t>(SchemeId::clear), ErrorCode::format, "public key scheme mismatch");
    require(r.u8() == kCiphertextVersion, ErrorCode::version, "public key version mismatch");
    PublicKey pk;
    pk.fingerprint = r.u64();
    pk.key_id = r.u64();
    require(pk.fingerprint == fingerprint_, ErrorCode::fingerprint, "public key from different parameters");
    return pk;
  }

 private:
  void check_plain(const PackedPlaintext& p) const {
    require(p.slots.size() == params_.slot_count, ErrorCode::layout,
            "plaintext has " + std::to_string(p.slots.size()) + " slots, params declare " +
                std::to_string(params_.slot_count));
    require(p.layout.used() <= params_.slot_count, ErrorCode::capacity, "layout exceeds slot count");
  }
  void check_ct(const Ciphertext& c) const {
    require(c.fingerprint == fingerprint_, ErrorCode::fingerprint, "ciphertext from different parameters");
  }

  HEParams params_;
  std::uint64_t fingerprint_;
};

static_assert(Backend<ClearBackend>);

}  // namespace permhe::he

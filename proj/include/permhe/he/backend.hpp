// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "permhe/bytes.hpp"
#include "permhe/he/params.hpp"
#include "permhe/packing.hpp"
#include "permhe/prng.hpp"

namespace permhe::he {

template <class Pk, class Sk>
struct KeyPair {
  Pk public_key;
  Sk secret_key;
};

/// Wire header common to all ciphertexts:
///   u8 scheme_id, u8 version, u16 d, u16 g, u16 level, f64 scale, u64 params fingerprint
inline constexpr std::uint8_t kCiphertextVersion = 1;
inline constexpr std::size_t kCiphertextHeaderBytes = 24;

/// The operations the protocol consumes. Only slot-wise ct+ct, ct+pt and
/// ct*pt are required; the server multiplies encrypted inputs by weights
/// it holds in the clear, so there is no ct*ct and no relinearization.
///
/// MulOperand / AddOperand are plaintexts pre-encoded for a given level so
/// a server can encode a model once and reuse it across sessions.
template <class B>
concept Backend = requires(const B& be, Prng& rng, const PackedPlaintext& p, const typename B::PublicKey& pk,
                           const typename B::SecretKey& sk, const typename B::Ciphertext& ct,
                           const typename B::MulOperand& mop, const typename B::AddOperand& aop, ByteReader& reader,
                           ByteWriter& writer, std::uint32_t level, double scale) {
  { be.params() } -> std::same_as<const HEParams&>;
  { be.fresh_level() } -> std::convertible_to<std::uint32_t>;
  { be.fresh_scale() } -> std::convertible_to<double>;
  { be.keygen(rng) } -> std::same_as<KeyPair<typename B::PublicKey, typename B::SecretKey>>;
  { be.encrypt(pk, p, rng) } -> std::same_as<typename B::Ciphertext>;
  { be.decrypt(sk, ct) } -> std::same_as<PackedPlaintext>;
  { be.add_ct(ct, ct) } -> std::same_as<typename B::Ciphertext>;
  { be.add_pt(ct, p) } -> std::same_as<typename B::Ciphertext>;
  { be.add_pt(ct, aop) } -> std::same_as<typename B::Ciphertext>;
  { be.mul_pt(ct, p) } -> std::same_as<typename B::Ciphertext>;
  { be.mul_pt(ct, mop) } -> std::same_as<typename B::Ciphertext>;
  { be.encode_mul_operand(p, level) } -> std::same_as<typename B::MulOperand>;
  { be.encode_add_operand(p, level, scale) } -> std::same_as<typename B::AddOperand>;
  { be.serialize(ct, writer) };
  { be.deserialize_ciphertext(reader) } -> std::same_as<typename B::Ciphertext>;
  { be.serialized_size(ct) } -> std::same_as<std::size_t>;
  { be.serialize_public_key(pk, writer) };
  { be.deserialize_public_key(reader) } -> std::same_as<typename B::PublicKey>;
  { ct.level } -> std::convertible_to<std::uint32_t>;
  { ct.layout } -> std::convertible_to<Layout>;
};

struct OpCounts {
  std::atomic<std::uint64_t> encrypt{0};
  std::atomic<std::uint64_t> decrypt{0};
  std::atomic<std::uint64_t> add_ct{0};
  std::atomic<std::uint64_t> add_pt{0};
  std::atomic<std::uint64_t> mul_pt{0};

  std::uint64_t evals() const { return add_ct + add_pt + mul_pt; }
  void reset() {
    encrypt = 0;
    decrypt = 0;
    add_ct = 0;
    add_pt = 0;
    mul_pt = 0;
  }
};

/// Forwarding decorator that counts every homomorphic call.
template <Backend B>
class Counted {
 public:
  using PublicKey = typename B::PublicKey;
  using SecretKey = typename B::SecretKey;
  using Ciphertext = typename B::Ciphertext;
  using MulOperand = typename B::MulOperand;
  using AddOperand = typename B::AddOperand;

  Counted(const B& inner, OpCounts& counts) : inner_(&inner), counts_(&counts) {}

  const HEParams& params() const { return inner_->params(); }
  std::uint32_t fresh_level() const { return inner_->fresh_level(); }
  double fresh_scale() const { return inner_->fresh_scale(); }
  KeyPair<PublicKey, SecretKey> keygen(Prng& rng) const { return inner_->keygen(rng); }
  Ciphertext encrypt(const PublicKey& pk, const PackedPlaintext& p, Prng& rng) const {
    ++counts_->encrypt;
    return inner_->encrypt(pk, p, rng);
  }
  PackedPlaintext decrypt(const SecretKey& sk, const Ciphertext& c) const {
    ++counts_->decrypt;
    return inner_->decrypt(sk, c);
  }
  Ciphertext add_ct(const Ciphertext& a, const Ciphertext& b) const {
    ++counts_->add_ct;
    return inner_->add_ct(a, b);
  }
  Ciphertext add_pt(const Ciphertext& c, const PackedPlaintext& p) const {
    ++counts_->add_pt;
    return inner_->add_pt(c, p);
  }
  Ciphertext add_pt(const Ciphertext& c, const AddOperand& p) const {
    ++counts_->add_pt;
    return inner_->add_pt(c, p);
  }
  Ciphertext mul_pt(const Ciphertext& c, const PackedPlaintext& p) const {
    ++counts_->mul_pt;
    return inner_->mul_pt(c, p);
  }
  Ciphertext mul_pt(const Ciphertext& c, const MulOperand& p) const {
    ++counts_->mul_pt;
    return inner_->mul_pt(c, p);
  }
  MulOperand encode_mul_operand(const PackedPlaintext& p, std::uint32_t level) const {
    return inner_->encode_mul_operand(p, level);
  }
  AddOperand encode_add_operand(const PackedPlaintext& p, std::uint32_t level, double scale) const {
    return inner_->encode_add_operand(p, level, scale);
  }
  void serialize(const Ciphertext& c, ByteWriter& w) const { inner_->serialize(c, w); }
  Ciphertext deserialize_ciphertext(ByteReader& r) const { return inner_->deserialize_ciphertext(r); }
  std::size_t serialized_size(const Ciphertext& c) const { return inner_->serialized_size(c); }
  void serialize_public_key(const PublicKey& pk, ByteWriter& w) const { inner_->serialize_public_key(pk, w); }
  PublicKey deserialize_public_key(ByteReader& r) const { return inner_->deserialize_public_key(r); }

 private:
  const B* inner_;
  OpCounts* counts_;
};

namespace detail {

inline void write_ct_header(ByteWriter& w, SchemeId scheme, const Layout& layout, std::uint32_t level, double scale,
                            std::uint64_t fingerprint) {
  w.u8(static_cast<std::uint8_t>(scheme));
  w.u8(kCiphertextVersion);
  w.u16(layout.order);
  w.u16(layout.batch);
  w.u16(static_cast<std::uint16_t>(level));
  w.f64(scale);
  w.u64(fingerprint);
}

struct CtHeader {
  Layout layout;
  std::uint32_t level;
  double scale;
};

inline CtHeader read_ct_header(ByteReader& r, SchemeId expected, std::uint64_t fingerprint) {
  const auto scheme = r.u8();
  require(scheme == static_cast<std::uint8_t>(expected), ErrorCode::format,
          "ciphertext scheme id " + std::to_string(scheme) + " does not match backend");
  const auto version = r.u8();
  require(version == kCiphertextVersion, ErrorCode::version, "unsupported ciphertext version " + std::to_string(version));
  CtHeader h;
  h.layout.order = r.u16();
  h.layout.batch = r.u16();
  h.level = r.u16();
  h.scale = r.f64();
  require(r.u64() == fingerprint, ErrorCode::fingerprint, "ciphertext was produced under different parameters");
  return h;
}

}  // namespace detail

}  // namespace permhe::he

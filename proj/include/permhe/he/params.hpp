// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sodium.h>

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "permhe/bytes.hpp"
#include "permhe/error.hpp"
#include "permhe/prng.hpp"

namespace permhe::he {

enum class SchemeId : std::uint8_t { clear = 0, ckks_lite = 1 };

inline std::string_view to_string(SchemeId s) { return s == SchemeId::clear ? "clear" : "ckks_lite"; }

inline SchemeId parse_scheme(std::string_view name) {
  if (name == "clear") return SchemeId::clear;
  if (name == "ckks_lite" || name == "ckks") return SchemeId::ckks_lite;
  throw Error(ErrorCode::config, "unknown backend '" + std::string(name) + "'");
}

struct CkksParams {
  std::uint32_t ring_dim = 8192;
  std::uint32_t scale_bits = 30;
  std::uint32_t prime_bits = 60;
  double sigma = 3.2;
  std::uint32_t secret_hamming_weight = 64;

  friend bool operator==(const CkksParams&, const CkksParams&) = default;
};

/// Parameter set shared by both parties. The declared error bound
/// `epsilon` is what scheme-agnostic tests compare against.
struct HEParams {
  SchemeId scheme = SchemeId::clear;
  std::uint32_t slot_count = 4096;
  std::uint32_t multiplicative_depth = 1;
  double epsilon = 0.0;
  CkksParams ckks{};

  static HEParams clear(std::uint32_t slot_count = 4096, std::uint32_t depth = 1) {
    HEParams p;
    p.scheme = SchemeId::clear;
    p.slot_count = slot_count;
    p.multiplicative_depth = depth;
    p.epsilon = 0.0;
    p.validate();
    return p;
  }

  static HEParams ckks_lite(CkksParams c = {}, std::uint32_t depth = 1) {
    HEParams p;
    p.scheme = SchemeId::ckks_lite;
    p.ckks = c;
    p.slot_count = c.ring_dim / 2;
    p.multiplicative_depth = depth;
    p.epsilon = 1e-4;
    p.validate();
    return p;
  }

  void validate() const {
    require(slot_count >= 1 && std::has_single_bit(slot_count), ErrorCode::params,
            "slot_count must be a power of two");
    require(multiplicative_depth >= 1, ErrorCode::params, "multiplicative_depth must be at least 1");
    require(epsilon >= 0.0, ErrorCode::params, "epsilon must be non-negative");
    if (scheme == SchemeId::ckks_lite) {
      require(ckks.ring_dim >= 8 && std::has_single_bit(ckks.ring_dim), ErrorCode::params,
              "ring_dim must be a power of two >= 8");
      require(slot_count == ckks.ring_dim / 2, ErrorCode::params, "slot_count must be ring_dim / 2");
      require(ckks.scale_bits >= 20, ErrorCode::params, "encoding scale must be at least 2^20");
      require(ckks.prime_bits >= 30 && ckks.prime_bits <= 61, ErrorCode::params, "prime_bits must be in [30, 61]");
      require(ckks.scale_bits + 8 <= ckks.prime_bits, ErrorCode::params,
              "scale_bits leaves no headroom below the base prime");
      require(ckks.sigma > 0.0, ErrorCode::params, "sigma must be positive");
      require(ckks.secret_hamming_weight >= 1 && ckks.secret_hamming_weight <= ckks.ring_dim, ErrorCode::params,
              "secret_hamming_weight out of range");
      require(multiplicative_depth <= 16, ErrorCode::params, "multiplicative_depth above 16 is unsupported");
    }
  }

  void serialize(ByteWriter& w) const {
    w.u8(static_cast<std::uint8_t>(scheme));
    w.u32(slot_count);
    w.u32(multiplicative_depth);
    w.f64(epsilon);
    if (scheme == SchemeId::ckks_lite) {
      w.u32(ckks.ring_dim);
      w.u32(ckks.scale_bits);
      w.u32(ckks.prime_bits);
      w.f64(ckks.sigma);
      w.u32(ckks.secret_hamming_weight);
    }
  }

  static HEParams deserialize(ByteReader& r) {
    HEParams p;
    const auto id = r.u8();
    require(id <= 1, ErrorCode::params, "unknown scheme id " + std::to_string(id));
    p.scheme = static_cast<SchemeId>(id);
    p.slot_count = r.u32();
    p.multiplicative_depth = r.u32();
    p.epsilon = r.f64();
    if (p.scheme == SchemeId::ckks_lite) {
      p.ckks.ring_dim = r.u32();
      p.ckks.scale_bits = r.u32();
      p.ckks.prime_bits = r.u32();
      p.ckks.sigma = r.f64();
      p.ckks.secret_hamming_weight = r.u32();
    }
    p.validate();
    return p;
  }

  /// 64-bit BLAKE2b digest of the canonical encoding.
  std::uint64_t fingerprint() const {
    ensure_sodium();
    ByteWriter w;
    serialize(w);
    unsigned char out[8];
    crypto_generichash(out, sizeof out, w.data().data(), w.size(), nullptr, 0);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{out[i]} << (8 * i);
    return v;
  }

  friend bool operator==(const HEParams&, const HEParams&) = default;
};

}  // namespace permhe::he

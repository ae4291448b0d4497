// SPDX-License-Identifier: Apache-2.0
#pragma once

// Payload layouts (all little-endian):
//   HELLO      params | u32 pk_len pk | u32 input_dim | u16 batch g | u16 input count
//   MODEL_ACK  u32 input_dim | u32 stages | per stage: u32 rows u32 cols u32 order u8 activation (0xFF none)
//   INPUT_SET  u32 stage | u32 count | per ciphertext: u32 len bytes
//   NLNF_REQ   u32 stage | ciphertext
//   RESULT     ciphertext
//   ERROR      u16 code | u32 len detail
// A reply to NLNF_REQ is an INPUT_SET for the following stage.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "permhe/bytes.hpp"
#include "permhe/he/backend.hpp"
#include "permhe/protocol/plan.hpp"
#include "permhe/transport/transcript.hpp"

namespace permhe::protocol {

enum class MessageKind : std::uint8_t {
  hello = 1,
  model_ack = 2,
  input_set = 3,
  nlnf_req = 4,
  result = 5,
  error = 6,
};

constexpr std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::hello: return "HELLO";
    case MessageKind::model_ack: return "MODEL_ACK";
    case MessageKind::input_set: return "INPUT_SET";
    case MessageKind::nlnf_req: return "NLNF_REQ";
    case MessageKind::result: return "RESULT";
    case MessageKind::error: return "ERROR";
  }
  return "?";
}

inline std::string kind_name(std::uint8_t k) {
  if (k >= 1 && k <= 6) return std::string(to_string(static_cast<MessageKind>(k)));
  return "kind " + std::to_string(k);
}

/// Data class carried by each kind. Nothing in the protocol ever ships a
/// plaintext-class payload.
constexpr transport::DataClass data_class_of(MessageKind k) {
  switch (k) {
    case MessageKind::input_set:
    case MessageKind::nlnf_req:
    case MessageKind::result:
      return transport::DataClass::ciphertext;
    default:
      return transport::DataClass::public_data;
  }
}

inline constexpr std::uint8_t kNoActivation = 0xFF;

struct Hello {
  he::HEParams params;
  std::vector<std::uint8_t> public_key;
  std::uint32_t input_dim = 0;
  std::uint16_t batch = 1;
  std::uint16_t input_count = 1;

  std::vector<std::uint8_t> encode() const {
    ByteWriter w;
    params.serialize(w);
    w.u32(static_cast<std::uint32_t>(public_key.size()));
    w.bytes(public_key);
    w.u32(input_dim);
    w.u16(batch);
    w.u16(input_count);
    return std::move(w).take();
  }
  static Hello decode(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    Hello h;
    h.params = he::HEParams::deserialize(r);
    auto pk = r.bytes(r.u32());
    h.public_key.assign(pk.begin(), pk.end());
    h.input_dim = r.u32();
    h.batch = r.u16();
    h.input_count = r.u16();
    r.expect_end();
    return h;
  }
};

struct ModelAck {
  std::uint32_t input_dim = 0;
  std::vector<StageShape> stages;

  std::vector<std::uint8_t> encode() const {
    ByteWriter w;
    w.u32(input_dim);
    w.u32(static_cast<std::uint32_t>(stages.size()));
    for (const auto& s : stages) {
      w.u32(s.rows);
      w.u32(s.cols);
      w.u32(s.order);
      w.u8(s.activation ? static_cast<std::uint8_t>(*s.activation) : kNoActivation);
    }
    return std::move(w).take();
  }
  static ModelAck decode(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    ModelAck a;
    a.input_dim = r.u32();
    const auto n = r.u32();
    require(n > 0 && n <= 4096, ErrorCode::protocol, "MODEL_ACK stage count out of range");
    std::uint32_t dim = a.input_dim;
    for (std::uint32_t i = 0; i < n; ++i) {
      StageShape s;
      s.rows = r.u32();
      s.cols = r.u32();
      s.order = r.u32();
      const auto act = r.u8();
      if (act != kNoActivation) s.activation = model::activation_from_code(act);
      require(s.cols == dim && s.order == std::max(s.rows, s.cols) && s.rows > 0, ErrorCode::protocol,
              "MODEL_ACK stage shapes do not chain");
      require(s.activation || i + 1 == n, ErrorCode::protocol, "MODEL_ACK: only the last stage may omit an activation");
      dim = s.rows;
      a.stages.push_back(s);
    }
    r.expect_end();
    return a;
  }
};

struct ErrorMessage {
  ErrorCode code = ErrorCode::protocol;
  std::string detail;

  std::vector<std::uint8_t> encode() const {
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(code));
    w.str(detail);
    return std::move(w).take();
  }
  static ErrorMessage decode(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    ErrorMessage e;
    const auto code = r.u16();
    e.code = code >= 1 && code <= static_cast<std::uint16_t>(ErrorCode::incomplete) ? static_cast<ErrorCode>(code)
                                                                                       : ErrorCode::protocol;
    e.detail = r.str();
    return e;
  }
};

template <he::Backend B>
struct InputSet {
  std::uint32_t stage = 0;
  std::vector<typename B::Ciphertext> ciphertexts;

  std::vector<std::uint8_t> encode(const B& be) const {
    ByteWriter w;
    w.u32(stage);
    w.u32(static_cast<std::uint32_t>(ciphertexts.size()));
    for (const auto& c : ciphertexts) {
      w.u32(static_cast<std::uint32_t>(be.serialized_size(c)));
      be.serialize(c, w);
    }
    return std::move(w).take();
  }
  static InputSet decode(const B& be, std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    InputSet s;
    s.stage = r.u32();
    const auto n = r.u32();
    require(n > 0 && n <= 0xFFFF, ErrorCode::protocol, "INPUT_SET ciphertext count out of range");
    s.ciphertexts.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      ByteReader one(r.bytes(r.u32()));
      s.ciphertexts.push_back(be.deserialize_ciphertext(one));
      one.expect_end();
    }
    r.expect_end();
    return s;
  }
};

template <he::Backend B>
struct NlnfRequest {
  std::uint32_t stage = 0;
  typename B::Ciphertext ciphertext;

  std::vector<std::uint8_t> encode(const B& be) const {
    ByteWriter w(4 + be.serialized_size(ciphertext));
    w.u32(stage);
    be.serialize(ciphertext, w);
    return std::move(w).take();
  }
  static NlnfRequest decode(const B& be, std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    NlnfRequest q;
    q.stage = r.u32();
    q.ciphertext = be.deserialize_ciphertext(r);
    r.expect_end();
    return q;
  }
};

template <he::Backend B>
std::vector<std::uint8_t> encode_result(const B& be, const typename B::Ciphertext& c) {
  ByteWriter w(be.serialized_size(c));
  be.serialize(c, w);
  return std::move(w).take();
}

template <he::Backend B>
typename B::Ciphertext decode_result(const B& be, std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto c = be.deserialize_ciphertext(r);
  r.expect_end();
  return c;
}

}  // namespace permhe::protocol

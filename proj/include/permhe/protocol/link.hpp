// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "permhe/protocol/messages.hpp"
#include "permhe/transport/channel.hpp"
#include "permhe/transport/transcript.hpp"

namespace permhe::protocol {

enum class Role { client, server };

struct Received {
  MessageKind kind;
  std::vector<std::uint8_t> payload;
  std::size_t frame_bytes = 0;
};

/// One party's framed view of a channel. Every frame in either direction is
/// appended to that party's transcript.
class Link {
 public:
  Link(transport::Channel& channel, transport::Transcript& transcript, Role role,
       std::size_t max_payload = transport::kDefaultMaxPayload)
      : channel_(channel), transcript_(transcript), role_(role), max_payload_(max_payload) {}

  transport::Direction outbound() const {
    return role_ == Role::client ? transport::Direction::upload : transport::Direction::download;
  }
  transport::Direction inbound() const {
    return role_ == Role::client ? transport::Direction::download : transport::Direction::upload;
  }

  std::size_t send(MessageKind kind, std::vector<std::uint8_t> payload) {
    transport::Frame f{static_cast<std::uint8_t>(kind), std::move(payload)};
    const auto header = transport::encode_frame_header(f, max_payload_);
    channel_.write(header);
    channel_.write(f.payload);
    transcript_.append(outbound(), f.kind, data_class_of(kind), header, f.payload);
    return f.wire_size();
  }

  Received recv() {
    transport::Frame f = transport::recv_frame(channel_, max_payload_);
    require(f.kind >= 1 && f.kind <= static_cast<std::uint8_t>(MessageKind::error), ErrorCode::protocol,
            "unknown message " + kind_name(f.kind));
    const auto kind = static_cast<MessageKind>(f.kind);
    const auto header = transport::encode_frame_header(f, max_payload_);
    transcript_.append(inbound(), f.kind, data_class_of(kind), header, f.payload);
    const std::size_t bytes = f.wire_size();
    return Received{kind, std::move(f.payload), bytes};
  }

  /// Best effort: the peer may already be gone.
  void send_error(const Error& e) noexcept {
    try {
      send(MessageKind::error, ErrorMessage{e.code(), e.what()}.encode());
    } catch (...) {
    }
  }

  transport::Channel& channel() { return channel_; }

 private:
  transport::Channel& channel_;
  transport::Transcript& transcript_;
  Role role_;
  std::size_t max_payload_;
};

[[noreturn]] inline void raise_remote(const Received& r, std::string_view peer) {
  const auto e = ErrorMessage::decode(r.payload);
  throw Error(ErrorCode::protocol,
              std::string(peer) + " aborted the session (" + std::string(to_string(e.code)) + "): " + e.detail);
}

[[noreturn]] inline void raise_unexpected(MessageKind got, std::string_view state) {
  throw Error(ErrorCode::protocol,
              "unexpected " + std::string(to_string(got)) + " while " + std::string(state));
}

}  // namespace permhe::protocol

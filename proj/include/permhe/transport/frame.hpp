// SPDX-License-Identifier: Apache-2.0
#pragma once

// Wire frame: u32 length (LE) = payload bytes + 2, u8 version, u8 kind, payload.

#include <cstdint>
#include <span>
#include <vector>

#include "permhe/bytes.hpp"
#include "permhe/error.hpp"

namespace permhe::transport {

inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 6;
inline constexpr std::size_t kDefaultMaxPayload = std::size_t{1} << 30;

struct Frame {
  std::uint8_t kind = 0;
  std::vector<std::uint8_t> payload;

  std::size_t wire_size() const { return kFrameHeaderBytes + payload.size(); }
};

inline std::vector<std::uint8_t> encode_frame_header(const Frame& f, std::size_t max_payload = kDefaultMaxPayload) {
  require(f.payload.size() <= max_payload && f.payload.size() + 2 <= 0xFFFFFFFFull, ErrorCode::oversize,
          "frame payload of " + std::to_string(f.payload.size()) + " bytes exceeds limit");
  ByteWriter w(kFrameHeaderBytes);
  w.u32(static_cast<std::uint32_t>(f.payload.size() + 2));
  w.u8(kFrameVersion);
  w.u8(f.kind);
  return std::move(w).take();
}

/// Parses the fixed header; returns the payload length still to be read.
inline std::size_t parse_frame_header(std::span<const std::uint8_t> header, Frame& out,
                                      std::size_t max_payload = kDefaultMaxPayload) {
  ByteReader r(header);
  const std::uint32_t length = r.u32();
  require(length >= 2, ErrorCode::format, "frame length field below minimum");
  const std::uint8_t version = r.u8();
  require(version == kFrameVersion, ErrorCode::version, "unsupported frame version " + std::to_string(version));
  out.kind = r.u8();
  const std::size_t payload = length - 2;
  require(payload <= max_payload, ErrorCode::oversize,
          "incoming frame of " + std::to_string(payload) + " bytes exceeds limit");
  return payload;
}

}  // namespace permhe::transport

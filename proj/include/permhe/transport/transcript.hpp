// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sodium.h>

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "permhe/prng.hpp"
#include "permhe/transport/metrics.hpp"

namespace permhe::transport {

enum class DataClass : std::uint8_t { ciphertext = 0, public_data, plaintext };

constexpr std::string_view to_string(DataClass c) {
  switch (c) {
    case DataClass::ciphertext: return "ciphertext";
    case DataClass::public_data: return "public";
    case DataClass::plaintext: return "plaintext";
  }
  return "?";
}

using Digest = std::array<std::uint8_t, 16>;

inline Digest digest_of(std::span<const std::uint8_t> header, std::span<const std::uint8_t> payload) {
  ensure_sodium();
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, sizeof(Digest));
  crypto_generichash_update(&st, header.data(), header.size());
  crypto_generichash_update(&st, payload.data(), payload.size());
  Digest d{};
  crypto_generichash_final(&st, d.data(), d.size());
  return d;
}

struct TranscriptEntry {
  Direction direction = Direction::upload;
  std::uint8_t kind = 0;
  DataClass data_class = DataClass::public_data;
  std::uint64_t bytes = 0;  // full frame length, header included
  std::int64_t timestamp_us = 0;
  Digest digest{};
  std::vector<std::uint8_t> payload;  // kept only when capture is on

  /// Identity ignoring wall-clock time.
  bool same_content(const TranscriptEntry& o) const {
    return direction == o.direction && kind == o.kind && data_class == o.data_class && bytes == o.bytes &&
           digest == o.digest;
  }
};

/// Append-only log of every frame one party put on or took off the wire.
class Transcript {
 public:
  explicit Transcript(bool capture_payloads = false)
      : capture_(capture_payloads), origin_(std::chrono::steady_clock::now()) {}

  void append(Direction d, std::uint8_t kind, DataClass cls, std::span<const std::uint8_t> header,
              std::span<const std::uint8_t> payload) {
    TranscriptEntry e;
    e.direction = d;
    e.kind = kind;
    e.data_class = cls;
    e.bytes = header.size() + payload.size();
    e.timestamp_us =
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - origin_).count();
    e.digest = digest_of(header, payload);
    if (capture_) e.payload.assign(payload.begin(), payload.end());
    entries_.push_back(std::move(e));
  }

  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  bool captures_payloads() const { return capture_; }

  std::uint64_t bytes(Direction d) const {
    std::uint64_t t = 0;
    for (const auto& e : entries_)
      if (e.direction == d) t += e.bytes;
    return t;
  }

  bool same_content(const Transcript& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (!entries_[i].same_content(o.entries_[i])) return false;
    return true;
  }

 private:
  bool capture_;
  std::chrono::steady_clock::time_point origin_;
  std::vector<TranscriptEntry> entries_;
};

}  // namespace permhe::transport

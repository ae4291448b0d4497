// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstring>
#include <string>
#include <unordered_set>
#include <vector>

#include "permhe/model/layers.hpp"
#include "permhe/protocol/messages.hpp"
#include "permhe/transport/transcript.hpp"

namespace permhe::protocol {

struct AuditFinding {
  std::size_t entry = 0;
  std::string what;
};

struct AuditReport {
  std::vector<AuditFinding> findings;
  std::size_t entries = 0;
  std::size_t bytes_scanned = 0;

  bool clean() const { return findings.empty(); }
  std::string summary() const {
    std::string s = std::to_string(entries) + " entries, " + std::to_string(bytes_scanned) + " payload bytes scanned, " +
                    std::to_string(findings.size()) + " findings";
    for (const auto& f : findings) s += "\n  #" + std::to_string(f.entry) + ": " + f.what;
    return s;
  }
};

/// Values each side must keep to itself. The byte scan looks for their exact
/// f64 encodings at every offset of the frames crossing to the other party;
/// it is only meaningful when ciphertexts are real encryptions.
struct AuditSecrets {
  std::vector<double> client_values;  // inputs
  std::vector<double> server_values;  // weights and biases
};

inline std::vector<double> model_values(const model::ModelSpec& m) {
  std::vector<double> v;
  for (const auto& l : m.layers) {
    if (auto* lin = std::get_if<model::Linear>(&l)) {
      v.insert(v.end(), lin->weights.entries().begin(), lin->weights.entries().end());
      v.insert(v.end(), lin->bias.begin(), lin->bias.end());
    }
  }
  return v;
}

namespace detail {

inline std::unordered_set<std::uint64_t> patterns(const std::vector<double>& vs) {
  std::unordered_set<std::uint64_t> out;
  for (double v : vs)
    if (v != 0.0) out.insert(std::bit_cast<std::uint64_t>(v));
  return out;
}

inline bool allowed(transport::Direction d, MessageKind k) {
  using transport::Direction;
  switch (k) {
    case MessageKind::hello:
    case MessageKind::input_set:
      return d == Direction::upload;
    case MessageKind::model_ack:
    case MessageKind::nlnf_req:
    case MessageKind::result:
      return d == Direction::download;
    case MessageKind::error:
      return true;
  }
  return false;
}

}  // namespace detail

/// Checks one party's transcript: every entry touching the server is
/// ciphertext or public, each kind travels only in its own direction with
/// its own class, and (with payload capture) no private value of either side
/// appears verbatim in a frame bound for the other.
inline AuditReport audit_transcript(const transport::Transcript& t, const AuditSecrets& secrets = {},
                                    bool scan_payloads = false) {
  AuditReport rep;
  const auto client_secret = detail::patterns(secrets.client_values);
  const auto server_secret = detail::patterns(secrets.server_values);
  const auto& entries = t.entries();
  rep.entries = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    auto flag = [&](std::string what) { rep.findings.push_back({i, std::move(what)}); };
    if (e.data_class == transport::DataClass::plaintext) flag("plaintext-class payload on the wire");
    if (e.kind < 1 || e.kind > static_cast<std::uint8_t>(MessageKind::error)) {
      flag("unknown message " + kind_name(e.kind));
      continue;
    }
    const auto kind = static_cast<MessageKind>(e.kind);
    if (e.data_class != data_class_of(kind))
      flag(std::string(to_string(kind)) + " recorded as " + std::string(transport::to_string(e.data_class)));
    if (!detail::allowed(e.direction, kind))
      flag(std::string(to_string(kind)) + " travelling in the wrong direction");
    if (!scan_payloads) continue;
    if (!t.captures_payloads()) {
      flag("payload scan requested on a transcript without captured payloads");
      break;
    }
    const auto& set = e.direction == transport::Direction::upload ? client_secret : server_secret;
    const auto& p = e.payload;
    rep.bytes_scanned += p.size();
    if (set.empty()) continue;
    for (std::size_t at = 0; at + 8 <= p.size(); ++at) {
      std::uint64_t w;
      std::memcpy(&w, p.data() + at, 8);
      if (set.count(w)) {
        flag(std::string(to_string(kind)) + " carries a private value verbatim at byte " + std::to_string(at));
        break;
      }
    }
  }
  return rep;
}

}  // namespace permhe::protocol

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace permhe {

enum class ErrorCode : std::uint16_t {
  dimension = 1,
  capacity,
  layout,
  params,
  fingerprint,
  level,
  scale,
  format,
  hash,
  shape,
  activation,
  io,
  transport,
  disconnected,
  oversize,
  version,
  protocol,
  config,
  incomplete,
};

enum class ErrorCategory { computation, config, transport, protocol };

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::capacity: return "capacity";
    case ErrorCode::layout: return "layout";
    case ErrorCode::params: return "params";
    case ErrorCode::fingerprint: return "fingerprint";
    case ErrorCode::level: return "level";
    case ErrorCode::scale: return "scale";
    case ErrorCode::format: return "format";
    case ErrorCode::hash: return "hash";
    case ErrorCode::shape: return "shape";
    case ErrorCode::activation: return "activation";
    case ErrorCode::io: return "io";
    case ErrorCode::transport: return "transport";
    case ErrorCode::disconnected: return "disconnected";
    case ErrorCode::oversize: return "oversize";
    case ErrorCode::version: return "version";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::config: return "config";
    case ErrorCode::incomplete: return "incomplete";
  }
  return "unknown";
}

constexpr ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::transport:
    case ErrorCode::disconnected:
    case ErrorCode::oversize:
    case ErrorCode::version:
      return ErrorCategory::transport;
    case ErrorCode::protocol:
      return ErrorCategory::protocol;
    case ErrorCode::config:
    case ErrorCode::io:
    case ErrorCode::hash:
    case ErrorCode::shape:
    case ErrorCode::activation:
      return ErrorCategory::config;
    default:
      return ErrorCategory::computation;
  }
}

/// Every failure raised by the library carries a code so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace permhe

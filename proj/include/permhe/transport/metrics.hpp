// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permhe/error.hpp"

namespace permhe::transport {

enum class Phase : std::uint8_t {
  client_encode_encrypt = 0,
  server_set_model,
  server_dnn_computation,
  client_decrypt_decode,
};
inline constexpr std::size_t kPhaseCount = 4;
inline constexpr std::array<Phase, kPhaseCount> kPhases = {Phase::client_encode_encrypt, Phase::server_set_model,
                                                            Phase::server_dnn_computation,
                                                            Phase::client_decrypt_decode};

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::client_encode_encrypt: return "client_encode_encrypt";
    case Phase::server_set_model: return "server_set_model";
    case Phase::server_dnn_computation: return "server_dnn_computation";
    case Phase::client_decrypt_decode: return "client_decrypt_decode";
  }
  return "?";
}

constexpr std::string_view display_name(Phase p) {
  switch (p) {
    case Phase::client_encode_encrypt: return "Client  Encode + Encry.";
    case Phase::server_set_model: return "Server  Set Model";
    case Phase::server_dnn_computation: return "Server  DNN Computation";
    case Phase::client_decrypt_decode: return "Client  Decry.+ Decode";
  }
  return "?";
}

/// Upload is client to server, download is server to client.
enum class Direction : std::uint8_t { upload = 0, download = 1 };

inline constexpr double kBytesPerMb = 1024.0 * 1024.0;

struct PhaseMetrics {
  Phase phase = Phase::client_encode_encrypt;
  double latency_ms = 0;
  std::uint64_t upload_bytes = 0;
  std::uint64_t download_bytes = 0;

  std::uint64_t comm_bytes() const { return upload_bytes + download_bytes; }
  double comm_mb() const { return static_cast<double>(comm_bytes()) / kBytesPerMb; }
};

struct PhaseReport {
  std::array<PhaseMetrics, kPhaseCount> rows{};

  PhaseMetrics& operator[](Phase p) { return rows[static_cast<std::size_t>(p)]; }
  const PhaseMetrics& operator[](Phase p) const { return rows[static_cast<std::size_t>(p)]; }

  double total_latency_ms() const {
    double t = 0;
    for (const auto& r : rows) t += r.latency_ms;
    return t;
  }
  std::uint64_t total_upload_bytes() const {
    std::uint64_t t = 0;
    for (const auto& r : rows) t += r.upload_bytes;
    return t;
  }
  std::uint64_t total_download_bytes() const {
    std::uint64_t t = 0;
    for (const auto& r : rows) t += r.download_bytes;
    return t;
  }
  std::uint64_t total_comm_bytes() const { return total_upload_bytes() + total_download_bytes(); }
  double total_comm_mb() const { return static_cast<double>(total_comm_bytes()) / kBytesPerMb; }

  std::string table() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-26s %14s %12s %12s %12s\n", "Phase", "Latency (ms)", "Comm. (MB)", "Up (MB)",
                  "Down (MB)");
    out += line;
    auto row = [&](std::string_view name, double ms, std::uint64_t up, std::uint64_t down) {
      std::snprintf(line, sizeof line, "%-26.*s %14.3f %12.6f %12.6f %12.6f\n", static_cast<int>(name.size()),
                    name.data(), ms, static_cast<double>(up + down) / kBytesPerMb,
                    static_cast<double>(up) / kBytesPerMb, static_cast<double>(down) / kBytesPerMb);
      out += line;
    };
    for (const auto& r : rows) row(display_name(r.phase), r.latency_ms, r.upload_bytes, r.download_bytes);
    row("        Total", total_latency_ms(), total_upload_bytes(), total_download_bytes());
    std::snprintf(line, sizeof line, "bytes: upload %llu, download %llu, total %llu\n",
                  static_cast<unsigned long long>(total_upload_bytes()),
                  static_cast<unsigned long long>(total_download_bytes()),
                  static_cast<unsigned long long>(total_comm_bytes()));
    out += line;
    return out;
  }

  static std::string csv_header() { return "phase,latency_ms,comm_mb\n"; }

  // comm_mb printed with enough digits that bytes = round(mb * 2^20) is recoverable.
  std::string csv_rows(std::string_view prefix = {}) const {
    std::string out;
    char line[160];
    auto row = [&](std::string_view name, double ms, double mb) {
      std::snprintf(line, sizeof line, ",%.6f,%.9f\n", ms, mb);
      out.append(prefix).append(name).append(line);
    };
    for (const auto& r : rows) row(to_string(r.phase), r.latency_ms, r.comm_mb());
    row("total", total_latency_ms(), total_comm_mb());
    return out;
  }

  std::string csv() const { return csv_header() + csv_rows(); }

  /// Row-wise arithmetic mean; byte columns are averaged with integer rounding.
  static PhaseReport mean(std::span<const PhaseReport> reports) {
    require(!reports.empty(), ErrorCode::incomplete, "mean of zero reports");
    PhaseReport m;
    for (std::size_t i = 0; i < kPhaseCount; ++i) {
      m.rows[i].phase = kPhases[i];
      double ms = 0, up = 0, down = 0;
      for (const auto& r : reports) {
        ms += r.rows[i].latency_ms;
        up += static_cast<double>(r.rows[i].upload_bytes);
        down += static_cast<double>(r.rows[i].download_bytes);
      }
      const double k = static_cast<double>(reports.size());
      m.rows[i].latency_ms = ms / k;
      m.rows[i].upload_bytes = static_cast<std::uint64_t>(up / k + 0.5);
      m.rows[i].download_bytes = static_cast<std::uint64_t>(down / k + 0.5);
    }
    return m;
  }
};

/// Splits one party's session timeline into phase segments and attributes
/// each frame to an explicit phase. Latency segments are contiguous, so the
/// phases partition the time between start() and finish().
class Meter {
 public:
  using Clock = std::chrono::steady_clock;

  Meter() {
    for (std::size_t i = 0; i < kPhaseCount; ++i) report_.rows[i].phase = kPhases[i];
  }

  void start(Phase p) {
    current_ = p;
    mark_ = Clock::now();
    finished_ = false;
  }

  void enter(Phase p) {
    require(current_.has_value(), ErrorCode::incomplete, "meter not started");
    close_segment();
    current_ = p;
  }

  void finish() {
    if (!current_) return;
    close_segment();
    current_.reset();
    finished_ = true;
  }

  void record(Phase p, Direction d, std::uint64_t bytes) {
    auto& row = report_[p];
    (d == Direction::upload ? row.upload_bytes : row.download_bytes) += bytes;
  }

  std::optional<Phase> current() const { return current_; }
  bool finished() const { return finished_; }

  PhaseReport report() const {
    require(finished_, ErrorCode::incomplete, "session metrics requested before completion");
    return report_;
  }

 private:
  void close_segment() {
    const auto now = Clock::now();
    report_[*current_].latency_ms += std::chrono::duration<double, std::milli>(now - mark_).count();
    mark_ = now;
  }

  PhaseReport report_;
  std::optional<Phase> current_;
  Clock::time_point mark_{};
  bool finished_ = false;
};

}  // namespace permhe::transport

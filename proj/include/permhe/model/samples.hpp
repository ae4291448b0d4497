// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "permhe/error.hpp"

namespace permhe::model {

/// Gray levels 0..255 map onto [0, 1].
inline constexpr double kPixelScale = 255.0;

struct Sample {
  std::vector<double> values;
  std::optional<int> label;
};

enum class SampleFormat { csv, raw_idx };

inline SampleFormat parse_sample_format(std::string_view s) {
  if (s == "csv") return SampleFormat::csv;
  if (s == "raw-idx" || s == "idx") return SampleFormat::raw_idx;
  throw Error(ErrorCode::config, "unknown sample format '" + std::string(s) + "'");
}

inline SampleFormat guess_sample_format(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  return ext == ".csv" || ext == ".txt" ? SampleFormat::csv : SampleFormat::raw_idx;
}

namespace detail {

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto at = line.find(sep, start);
    out.push_back(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

}  // namespace detail

/// CSV rows `label,pixel0,...,pixelK` with gray levels in [0, 255]. A
/// non-numeric first row is taken as a header; blank lines are skipped.
inline std::vector<Sample> parse_samples_csv(std::istream& in, const std::string& where = "csv") {
  std::vector<Sample> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> width;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split(line, ',');
    const auto first = detail::parse_number(fields[0]);
    if (!first && out.empty() && !width) {
      width = fields.size();
      continue;
    }
    const std::string at = where + ":" + std::to_string(lineno);
    require(first.has_value(), ErrorCode::format, at + ": label is not a number");
    require(fields.size() >= 2, ErrorCode::format, at + ": record has no pixels");
    if (width) require(fields.size() == *width, ErrorCode::format, at + ": record width differs from earlier rows");
    width = fields.size();
    Sample s;
    require(*first == static_cast<int>(*first), ErrorCode::format, at + ": label must be an integer");
    s.label = static_cast<int>(*first);
    s.values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto v = detail::parse_number(fields[i]);
      require(v.has_value(), ErrorCode::format, at + ": field " + std::to_string(i) + " is not a number");
      require(*v >= 0.0 && *v <= kPixelScale, ErrorCode::format,
              at + ": pixel value outside [0, 255] in field " + std::to_string(i));
      s.values.push_back(*v / kPixelScale);
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// IDX image file (magic 0x00000803, big-endian counts, u8 pixels).
inline std::vector<Sample> parse_samples_idx(std::span<const std::uint8_t> data, const std::string& where = "idx") {
  if (data.empty()) return {};
  auto be32 = [&](std::size_t at) {
    require(at + 4 <= data.size(), ErrorCode::format, where + ": truncated header");
    return (std::uint32_t{data[at]} << 24) | (std::uint32_t{data[at + 1]} << 16) | (std::uint32_t{data[at + 2]} << 8) |
           std::uint32_t{data[at + 3]};
  };
  const auto magic = be32(0);
  require(magic == 0x00000803u, ErrorCode::format, where + ": not an idx image file");
  const std::size_t dims = magic & 0xff;
  const std::size_t count = be32(4);
  std::size_t width = 1;
  for (std::size_t d = 1; d < dims; ++d) width *= be32(4 + 4 * d);
  const std::size_t header = 4 + 4 * dims;
  require(data.size() == header + count * width, ErrorCode::format, where + ": payload length does not match header");
  std::vector<Sample> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].values.resize(width);
    for (std::size_t k = 0; k < width; ++k) out[i].values[k] = data[header + i * width + k] / kPixelScale;
  }
  return out;
}

/// Attaches labels from an idx1 label file.
inline void attach_idx_labels(std::vector<Sample>& samples, std::span<const std::uint8_t> data) {
  require(data.size() >= 8, ErrorCode::format, "label file truncated");
  require(data[0] == 0 && data[1] == 0 && data[2] == 8 && data[3] == 1, ErrorCode::format, "not an idx label file");
  require(data.size() - 8 == samples.size(), ErrorCode::format, "label count differs from image count");
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].label = data[8 + i];
}

inline std::vector<Sample> load_samples(const std::filesystem::path& p, SampleFormat fmt) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + p.string());
  if (fmt == SampleFormat::csv) return parse_samples_csv(in, p.filename().string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_samples_idx(data, p.filename().string());
}

inline std::vector<Sample> load_samples(const std::filesystem::path& p) { return load_samples(p, guess_sample_format(p)); }

}  // namespace permhe::model

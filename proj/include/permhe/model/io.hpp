// SPDX-License-Identifier: Apache-2.0
#pragma once

// Model file = JSON manifest + little-endian f64 blob. Every layer region is
// addressed by an element offset into the blob and the manifest pins the
// blob's BLAKE2b-256 digest.
//
//   {"format": "permhe-model", "version": 1, "input_dim": 64,
//    "blob": "mlp.bin", "blob_hash": "blake2b-256:<hex>",
//    "layers": [{"type": "linear", "in": 64, "out": 16, "weights": 0, "bias": 1024},
//               {"type": "activation", "kind": "relu"},
//               {"type": "conv", "in_channels": 1, "in_height": 28, "in_width": 28,
//                "out_channels": 6, "kernel": [5, 5], "stride": 1, "padding": 2,
//                "weights": ..., "bias": ...}]}

#include <sodium.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "permhe/bytes.hpp"
#include "permhe/model/layers.hpp"
#include "permhe/prng.hpp"

namespace permhe::model {

inline constexpr std::string_view kModelFormat = "permhe-model";
inline constexpr int kModelVersion = 1;
inline constexpr double kWeightWarnThreshold = 8.0;

namespace detail {

inline std::string hex(std::span<const std::uint8_t> b) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * b.size());
  for (auto x : b) {
    s.push_back(digits[x >> 4]);
    s.push_back(digits[x & 15]);
  }
  return s;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + p.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

inline void write_file(const std::filesystem::path& p, std::span<const std::uint8_t> data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  require(out.good(), ErrorCode::io, "short write to " + p.string());
}

class BlobView {
 public:
  explicit BlobView(std::span<const std::uint8_t> raw) : raw_(raw) {
    require(raw.size() % 8 == 0, ErrorCode::format, "weight blob length is not a multiple of 8");
  }
  std::size_t size() const { return raw_.size() / 8; }

  std::vector<double> take(std::size_t offset, std::size_t count, const std::string& what) {
    require(offset <= size() && count <= size() - offset, ErrorCode::format, what + " region lies outside the blob");
    used_ += count;
    ByteReader r(raw_.subspan(8 * offset, 8 * count));
    std::vector<double> v(count);
    for (auto& x : v) x = r.f64();
    return v;
  }
  std::size_t used() const { return used_; }

 private:
  std::span<const std::uint8_t> raw_;
  std::size_t used_ = 0;
};

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  require(j.contains(key), ErrorCode::format, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::format, where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline std::string blob_digest(std::span<const std::uint8_t> blob) {
  ensure_sodium();
  std::uint8_t h[32];
  crypto_generichash(h, sizeof h, blob.data(), blob.size(), nullptr, 0);
  return "blake2b-256:" + detail::hex(h);
}

/// Parses and validates a model without lowering convolutions.
inline ModelSpec read_model(const std::filesystem::path& manifest_path) {
  const auto text = detail::read_file(manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::format, manifest_path.string() + ": " + e.what());
  }
  const std::string where = manifest_path.filename().string();
  require(j.is_object(), ErrorCode::format, where + ": manifest must be an object");
  require(detail::field<std::string>(j, "format", where) == kModelFormat, ErrorCode::format,
          where + ": not a model manifest");
  const int version = detail::field<int>(j, "version", where);
  require(version == kModelVersion, ErrorCode::version, where + ": unsupported manifest version " + std::to_string(version));

  const auto blob_path = manifest_path.parent_path() / detail::field<std::string>(j, "blob", where);
  const auto raw = detail::read_file(blob_path);
  const auto expected = detail::field<std::string>(j, "blob_hash", where);
  require(blob_digest(raw) == expected, ErrorCode::hash, blob_path.string() + " does not match the manifest hash");
  detail::BlobView blob(raw);

  ModelSpec m;
  m.input_dim = detail::field<std::size_t>(j, "input_dim", where);
  const auto& layers = j.contains("layers") ? j.at("layers") : nlohmann::json();
  require(layers.is_array(), ErrorCode::format, where + ": 'layers' must be an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string at = where + " layer " + std::to_string(i);
    const auto type = detail::field<std::string>(l, "type", at);
    if (type == "linear") {
      const auto in = detail::field<std::size_t>(l, "in", at);
      const auto out = detail::field<std::size_t>(l, "out", at);
      auto w = blob.take(detail::field<std::size_t>(l, "weights", at), in * out, at + " weights");
      auto b = blob.take(detail::field<std::size_t>(l, "bias", at), out, at + " bias");
      m.layers.emplace_back(Linear{DenseMatrix(out, in, std::move(w)), std::move(b)});
    } else if (type == "activation") {
      m.layers.emplace_back(ActivationLayer{parse_activation(detail::field<std::string>(l, "kind", at))});
    } else if (type == "conv") {
      Conv c;
      c.in_channels = detail::field<std::size_t>(l, "in_channels", at);
      c.in_height = detail::field<std::size_t>(l, "in_height", at);
      c.in_width = detail::field<std::size_t>(l, "in_width", at);
      c.out_channels = detail::field<std::size_t>(l, "out_channels", at);
      const auto kernel = detail::field<std::vector<std::size_t>>(l, "kernel", at);
      require(kernel.size() == 2, ErrorCode::format, at + ": kernel must be [height, width]");
      c.kernel_height = kernel[0];
      c.kernel_width = kernel[1];
      c.stride = l.value("stride", std::size_t{1});
      c.padding = l.value("padding", std::size_t{0});
      c.kernels = blob.take(detail::field<std::size_t>(l, "weights", at),
                            c.out_channels * c.in_channels * c.kernel_height * c.kernel_width, at + " kernels");
      c.bias = blob.take(detail::field<std::size_t>(l, "bias", at), c.out_channels, at + " bias");
      m.layers.emplace_back(std::move(c));
    } else {
      throw Error(ErrorCode::format, at + ": unknown layer type '" + type + "'");
    }
  }
  require(blob.used() == blob.size(), ErrorCode::format,
          where + ": blob holds " + std::to_string(blob.size()) + " values but layers declare " +
              std::to_string(blob.used()));
  validate(m);
  if (const double w = max_abs_weight(m); w > kWeightWarnThreshold)
    spdlog::warn("{}: largest weight magnitude {:.3g} exceeds {}; encrypted results may lose precision", where, w,
                 kWeightWarnThreshold);
  return m;
}

/// Loads a model ready for inference: validated, convolutions lowered.
inline ModelSpec load_model(const std::filesystem::path& manifest_path) { return lower(read_model(manifest_path)); }

/// Writes manifest and blob; the blob lands next to the manifest as <stem>.bin.
inline void save_model(const ModelSpec& m, const std::filesystem::path& manifest_path) {
  validate(m);
  ByteWriter blob;
  std::size_t offset = 0;
  auto put = [&](std::span<const double> v) {
    const std::size_t at = offset;
    for (double x : v) blob.f64(x);
    offset += v.size();
    return at;
  };
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers) {
    if (auto* lin = std::get_if<Linear>(&l)) {
      const auto w = put(lin->weights.entries());
      const auto b = put(lin->bias);
      layers.push_back({{"type", "linear"}, {"in", lin->in_dim()}, {"out", lin->out_dim()}, {"weights", w}, {"bias", b}});
    } else if (auto* c = std::get_if<Conv>(&l)) {
      const auto w = put(c->kernels);
      const auto b = put(c->bias);
      layers.push_back({{"type", "conv"},
                        {"in_channels", c->in_channels},
                        {"in_height", c->in_height},
                        {"in_width", c->in_width},
                        {"out_channels", c->out_channels},
                        {"kernel", {c->kernel_height, c->kernel_width}},
                        {"stride", c->stride},
                        {"padding", c->padding},
                        {"weights", w},
                        {"bias", b}});
    } else {
      layers.push_back({{"type", "activation"}, {"kind", to_string(std::get<ActivationLayer>(l).kind)}});
    }
  }
  const auto blob_name = manifest_path.stem().string() + ".bin";
  nlohmann::json j = {{"format", kModelFormat},  {"version", kModelVersion},          {"input_dim", m.input_dim},
                      {"blob", blob_name},       {"blob_hash", blob_digest(blob.data())}, {"layers", layers}};
  detail::write_file(manifest_path.parent_path() / blob_name, blob.data());
  const std::string text = j.dump(2) + "\n";
  detail::write_file(manifest_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace permhe::model

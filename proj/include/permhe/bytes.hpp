// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permhe/error.hpp"

namespace permhe {

// Little-endian writer used by every wire encoding in the library.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { buf_.reserve(reserve); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void u64_array(std::span<const std::uint64_t> words) {
    std::size_t at = buf_.size();
    buf_.resize(at + 8 * words.size());
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(buf_.data() + at, words.data(), 8 * words.size());
    } else {
      for (std::size_t i = 0; i < words.size(); ++i)
        for (int b = 0; b < 8; ++b) buf_[at + 8 * i + b] = static_cast<std::uint8_t>(words[i] >> (8 * b));
    }
  }

  std::size_t size() const { return buf_.size(); }
  const std::vector<std::uint8_t>& data() const& { return buf_; }
  std::vector<std::uint8_t> take() && { return std::move(buf_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() {
    auto n = u32();
    auto s = bytes(n);
    return std::string(s.begin(), s.end());
  }
  void u64_array(std::span<std::uint64_t> out) {
    auto src = bytes(8 * out.size());
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), src.data(), src.size());
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= std::uint64_t{src[8 * i + b]} << (8 * b);
        out[i] = v;
      }
    }
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  std::span<const std::uint8_t> rest() { return bytes(remaining()); }
  void expect_end() const {
    require(remaining() == 0, ErrorCode::format, std::to_string(remaining()) + " trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    require(n <= remaining(), ErrorCode::format, "truncated input");
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace permhe

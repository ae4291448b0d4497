// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "permhe/ckks/ntt.hpp"

namespace permhe::ckks {

/// Canonical-embedding encoder for N/2 real slots. Slot j is the value of
/// the polynomial at zeta^(5^j), zeta = exp(i*pi/N); coefficient i carries
/// the real part of the inverse transform and coefficient i + N/2 its
/// imaginary part.
class CanonicalEncoder {
 public:
  explicit CanonicalEncoder(std::size_t ring_dim) : n_(ring_dim), slots_(ring_dim / 2), m_(2 * ring_dim) {
    require(std::has_single_bit(ring_dim) && ring_dim >= 4, ErrorCode::params, "ring_dim must be a power of two >= 4");
    rot_group_.resize(slots_);
    std::size_t five = 1;
    for (std::size_t j = 0; j < slots_; ++j) {
      rot_group_[j] = five;
      five = five * 5 % m_;
    }
    ksi_pows_.resize(m_ + 1);
    for (std::size_t j = 0; j < m_; ++j) {
      const double angle = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(m_);
      ksi_pows_[j] = {std::cos(angle), std::sin(angle)};
    }
    ksi_pows_[m_] = ksi_pows_[0];
  }

  std::size_t ring_dim() const { return n_; }
  std::size_t slot_count() const { return slots_; }

  /// Rounded integer coefficients of round(scale * embedding^{-1}(values)).
  std::vector<i128> encode(std::span<const double> values, double scale) const {
    require(values.size() <= slots_, ErrorCode::capacity,
            std::to_string(values.size()) + " values exceed " + std::to_string(slots_) + " slots");
    std::vector<std::complex<double>> v(slots_, {0.0, 0.0});
    for (std::size_t i = 0; i < values.size(); ++i) v[i] = {values[i], 0.0};
    special_fft_inverse(v);
    std::vector<i128> coeffs(n_, 0);
    for (std::size_t i = 0; i < slots_; ++i) {
      coeffs[i] = to_integer(v[i].real() * scale);
      coeffs[i + slots_] = to_integer(v[i].imag() * scale);
    }
    return coeffs;
  }

  /// Real parts of the slots of the polynomial with (centered) coefficients.
  std::vector<double> decode(std::span<const double> coeffs, double scale) const {
    require(coeffs.size() == n_, ErrorCode::format, "decode: coefficient count must equal ring_dim");
    std::vector<std::complex<double>> v(slots_);
    for (std::size_t i = 0; i < slots_; ++i) v[i] = {coeffs[i] / scale, coeffs[i + slots_] / scale};
    special_fft(v);
    std::vector<double> out(slots_);
    for (std::size_t i = 0; i < slots_; ++i) out[i] = v[i].real();
    return out;
  }

  void special_fft(std::vector<std::complex<double>>& vals) const {
    const std::size_t n = vals.size();
    bit_reverse(vals);
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t lenh = len >> 1;
      const std::size_t lenq = len << 2;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t j = 0; j < lenh; ++j) {
          const std::size_t idx = (rot_group_[j] % lenq) * (m_ / lenq);
          const auto u = vals[i + j];
          const auto v = vals[i + j + lenh] * ksi_pows_[idx];
          vals[i + j] = u + v;
          vals[i + j + lenh] = u - v;
        }
      }
    }
  }

  void special_fft_inverse(std::vector<std::complex<double>>& vals) const {
    const std::size_t n = vals.size();
    for (std::size_t len = n; len >= 2; len >>= 1) {
      const std::size_t lenh = len >> 1;
      const std::size_t lenq = len << 2;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t j = 0; j < lenh; ++j) {
          const std::size_t idx = (lenq - rot_group_[j] % lenq) * (m_ / lenq);
          const auto u = vals[i + j] + vals[i + j + lenh];
          const auto v = (vals[i + j] - vals[i + j + lenh]) * ksi_pows_[idx];
          vals[i + j] = u;
          vals[i + j + lenh] = v;
        }
      }
    }
    bit_reverse(vals);
    for (auto& x : vals) x /= static_cast<double>(n);
  }

 private:
  static i128 to_integer(double x) {
    require(std::isfinite(x) && std::fabs(x) < 0x1.0p120, ErrorCode::capacity, "encoded coefficient overflows");
    return static_cast<i128>(std::round(x));
  }

  static void bit_reverse(std::vector<std::complex<double>>& vals) {
    const std::size_t n = vals.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j >= bit; bit >>= 1) j -= bit;
      j += bit;
      if (i < j) std::swap(vals[i], vals[j]);
    }
  }

  std::size_t n_, slots_, m_;
  std::vector<std::size_t> rot_group_;
  std::vector<std::complex<double>> ksi_pows_;
};

}  // namespace permhe::ckks

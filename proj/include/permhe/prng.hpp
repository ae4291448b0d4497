// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sodium.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string_view>

#include "permhe/error.hpp"

namespace permhe {

inline void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error(ErrorCode::config, "libsodium failed to initialize");
  });
}

/// ChaCha20 keystream generator. Seeded instances are fully reproducible,
/// which the transcript-determinism properties depend on; unseeded ones
/// draw their key from the OS.
///
/// Satisfies UniformRandomBitGenerator so it plugs into <random>
/// distributions.
class Prng {
 public:
  using result_type = std::uint64_t;

  Prng() {
    ensure_sodium();
    randombytes_buf(key_.data(), key_.size());
  }

  explicit Prng(std::uint64_t seed, std::string_view label = "permhe.prng") {
    ensure_sodium();
    std::array<std::uint8_t, 8> s{};
    for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, key_.size());
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
    crypto_generichash_update(&st, s.data(), s.size());
    crypto_generichash_final(&st, key_.data(), key_.size());
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == buffer_.size()) refill();
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{buffer_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }

  /// Independent stream keyed from this one's key and a label.
  Prng fork(std::string_view label) {
    Prng child(0, "");
    crypto_generichash_state st;
    crypto_generichash_init(&st, key_.data(), key_.size(), child.key_.size());
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
    std::array<std::uint8_t, 8> n{};
    for (int i = 0; i < 8; ++i) n[i] = static_cast<std::uint8_t>(forks_ >> (8 * i));
    crypto_generichash_update(&st, n.data(), n.size());
    crypto_generichash_final(&st, child.key_.data(), child.key_.size());
    ++forks_;
    return child;
  }

  /// Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = max() - (max() % bound + 1) % bound;
    for (;;) {
      std::uint64_t v = (*this)();
      if (v <= limit) return v % bound;
    }
  }

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; own implementation so sampled
  /// values do not depend on the standard library's distribution code.
  double gaussian() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = unit();
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  void refill() {
    crypto_stream_chacha20_ietf(buffer_.data(), buffer_.size(), nonce_.data(), key_.data());
    for (auto& b : nonce_)
      if (++b != 0) break;
    pos_ = 0;
  }

  std::array<std::uint8_t, crypto_stream_chacha20_ietf_KEYBYTES> key_{};
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce_{};
  std::array<std::uint8_t, 4096> buffer_{};
  std::size_t pos_ = 4096;
  std::uint64_t forks_ = 0;
  std::optional<double> spare_;
};

}  // namespace permhe

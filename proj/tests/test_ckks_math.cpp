// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <complex>

#include "permhe/ckks/encoder.hpp"
#include "permhe/ckks/modarith.hpp"
#include "permhe/ckks/ntt.hpp"
#include "test_util.hpp"

using namespace permhe;
using namespace permhe::ckks;

namespace {

bool trial_division_prime(u64 n) {
  if (n < 2) return false;
  for (u64 d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

// Schoolbook product in Z_q[X]/(X^N + 1).
std::vector<u64> negacyclic_schoolbook(const Modulus& q, const std::vector<u64>& a, const std::vector<u64>& b) {
  const std::size_t n = a.size();
  std::vector<u64> out(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const u64 p = q.mul(a[i], b[j]);
      const std::size_t k = i + j;
      if (k < n)
        out[k] = q.add(out[k], p);
      else
        out[k - n] = q.sub(out[k - n], p);
    }
  return out;
}

std::vector<u64> ntt_product(const NttTable& t, std::vector<u64> a, std::vector<u64> b) {
  t.forward(a);
  t.forward(b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = t.modulus().mul(a[i], b[i]);
  t.inverse(a);
  return a;
}

// Direct O(N^2) evaluation of the canonical embedding: slot j is the value
// of the polynomial at exp(i*pi*5^j / N).
std::vector<std::complex<double>> direct_embedding(const std::vector<double>& coeffs) {
  const std::size_t n = coeffs.size();
  std::vector<std::complex<double>> out(n / 2);
  std::size_t rot = 1;
  for (std::size_t j = 0; j < n / 2; ++j) {
    std::complex<double> s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = M_PI * static_cast<double>((rot * i) % (2 * n)) / static_cast<double>(n);
      s += coeffs[i] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[j] = s;
    rot = rot * 5 % (2 * n);
  }
  return out;
}

}  // namespace

TEST(Modulus, BarrettMatchesBuiltinRemainder) {
  Prng rng(1);
  for (u64 qv : ntt_primes(60, 2, 8192)) {
    const Modulus q(qv);
    for (int i = 0; i < 20000; ++i) {
      const u64 a = rng.below(qv), b = rng.below(qv);
      const u128 x = u128{a} * b;
      ASSERT_EQ(q.mul(a, b), static_cast<u64>(x % qv));
      const u64 w = rng.below(qv);
      ASSERT_EQ(q.mul_shoup(a, w, q.shoup(w)), q.mul(a, w));
    }
    EXPECT_EQ(q.mul(qv - 1, qv - 1), 1u);
    EXPECT_EQ(q.mul(q.inv(12345), 12345), 1u);
  }
}

TEST(Primes, MillerRabinAgreesWithTrialDivision) {
  for (u64 n = 0; n < 20000; ++n) ASSERT_EQ(is_prime(n), trial_division_prime(n)) << n;
  EXPECT_TRUE(is_prime(2305843009213693951ULL));  // 2^61 - 1
  EXPECT_FALSE(is_prime(3215031751ULL));          // strong pseudoprime to bases 2, 3, 5, 7
}

TEST(Primes, ChainIsNttFriendlyDistinctDescending) {
  const auto ps = ntt_primes(60, 3, 8192);
  ASSERT_EQ(ps.size(), 3u);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_TRUE(is_prime(ps[i]));
    EXPECT_EQ(ps[i] % 16384, 1u);
    EXPECT_LT(ps[i], u64{1} << 60);
    EXPECT_GT(ps[i], u64{1} << 59);
    if (i) EXPECT_LT(ps[i], ps[i - 1]);
  }
}

TEST(Ntt, RoundtripIsBitExact) {
  Prng rng(2);
  const auto qs = ntt_primes(60, 1, 1024);
  const NttTable t(Modulus(qs[0]), 1024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<u64> a(1024);
    for (auto& x : a) x = rng.below(qs[0]);
    auto b = a;
    t.forward(b);
    t.inverse(b);
    ASSERT_EQ(a, b);
  }
}

TEST(Ntt, ZeroMapsToZero) {
  const auto qs = ntt_primes(60, 1, 256);
  const NttTable t(Modulus(qs[0]), 256);
  std::vector<u64> z(256, 0);
  t.forward(z);
  EXPECT_EQ(z, std::vector<u64>(256, 0));
}

TEST(Ntt, ProductMatchesSchoolbookForEightCoefficients) {
  Prng rng(3);
  const auto qs = ntt_primes(30, 1, 8);
  const Modulus q(qs[0]);
  const NttTable t(q, 8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<u64> a(8), b(8);
    for (auto& x : a) x = rng.below(qs[0]);
    for (auto& x : b) x = rng.below(qs[0]);
    ASSERT_EQ(ntt_product(t, a, b), negacyclic_schoolbook(q, a, b));
  }
}

TEST(Ntt, ProductMatchesSchoolbookExhaustivelyOnTernarySets) {
  // every pair of {-1,0,1} coefficient vectors for N = 2 and N = 4
  for (std::size_t n : {2u, 4u}) {
    const auto qs = ntt_primes(30, 1, n);
    const Modulus q(qs[0]);
    const NttTable t(q, n);
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    auto unpack = [&](std::size_t code) {
      std::vector<u64> v(n);
      for (std::size_t i = 0; i < n; ++i, code /= 3) v[i] = code % 3 == 2 ? q.value() - 1 : code % 3;
      return v;
    };
    for (std::size_t x = 0; x < total; ++x)
      for (std::size_t y = 0; y < total; ++y) {
        const auto a = unpack(x), b = unpack(y);
        ASSERT_EQ(ntt_product(t, a, b), negacyclic_schoolbook(q, a, b));
      }
  }
  // N = 8 and 16 over random small coefficients
  Prng rng(4);
  for (std::size_t n : {8u, 16u}) {
    const auto qs = ntt_primes(40, 1, n);
    const Modulus q(qs[0]);
    const NttTable t(q, n);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<u64> a(n), b(n);
      for (auto& x : a) x = q.from_signed(static_cast<i128>(rng.below(5)) - 2);
      for (auto& x : b) x = q.from_signed(static_cast<i128>(rng.below(5)) - 2);
      ASSERT_EQ(ntt_product(t, a, b), negacyclic_schoolbook(q, a, b));
    }
  }
}

TEST(RingElement, DomainFlagIsEnforced) {
  const auto qs = ntt_primes(40, 2, 16);
  const RnsContext ctx(16, qs);
  RingElement r(16, 2, Domain::coefficient);
  auto f = ntt_forward(ctx, r);
  EXPECT_EQ(f.domain, Domain::evaluation);
  EXPECT_THROW(ntt_forward(ctx, f), Error);
  EXPECT_THROW(ntt_inverse(ctx, r), Error);
  EXPECT_EQ(ntt_inverse(ctx, f), r);
}

TEST(Encoder, ZeroVectorRoundtripsExactly) {
  const CanonicalEncoder enc(64);
  const std::vector<double> zero(32, 0.0);
  const auto coeffs = enc.encode(zero, 0x1.0p30);
  for (auto c : coeffs) EXPECT_EQ(c, 0);
  std::vector<double> cd(64, 0.0);
  EXPECT_EQ(enc.decode(cd, 0x1.0p30), zero);
}

TEST(Encoder, SlotsAreDirectEmbeddingValues) {
  Prng rng(5);
  const CanonicalEncoder enc(32);
  std::vector<double> coeffs(32);
  for (auto& c : coeffs) c = static_cast<double>(static_cast<int>(rng.below(201)) - 100);
  const auto slots = enc.decode(coeffs, 1.0);
  const auto direct = direct_embedding(coeffs);
  for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(slots[j], direct[j].real(), 1e-9) << j;
}

TEST(Encoder, ConstantVectorMatchesDirectEmbedding) {
  const CanonicalEncoder enc(64);
  const std::vector<double> c(32, 0.625);
  const auto coeffs = enc.encode(c, 0x1.0p30);
  // a constant slot vector is the constant polynomial
  EXPECT_EQ(coeffs[0], static_cast<i128>(0.625 * 0x1.0p30));
  for (std::size_t i = 1; i < coeffs.size(); ++i) EXPECT_EQ(coeffs[i], 0) << i;
  std::vector<double> cd(coeffs.begin(), coeffs.end());
  for (auto& x : cd) x /= 0x1.0p30;
  for (const auto& z : direct_embedding(cd)) EXPECT_NEAR(z.real(), 0.625, 1e-12);
}

TEST(Encoder, RandomRoundtripWithinTwoToMinusTwenty) {
  Prng rng(6);
  const CanonicalEncoder enc(8192);
  for (int trial = 0; trial < 5; ++trial) {
    const auto v = testutil::random_vector(rng, 4096);
    const auto coeffs = enc.encode(v, 0x1.0p30);
    std::vector<double> cd(coeffs.begin(), coeffs.end());
    const auto back = enc.decode(cd, 0x1.0p30);
    EXPECT_LT(testutil::relative_error(back, v), 0x1.0p-20);
  }
}

TEST(Encoder, NegacyclicProductIsSlotwiseProduct) {
  Prng rng(7);
  const std::size_t n = 64;
  const CanonicalEncoder enc(n);
  const auto qs = ntt_primes(61, 1, n);
  const Modulus q(qs[0]);
  const auto a = testutil::random_vector(rng, n / 2);
  const auto b = testutil::random_vector(rng, n / 2);
  const double scale = 0x1.0p24;
  const auto ca = enc.encode(a, scale), cb = enc.encode(b, scale);
  std::vector<u64> ra(n), rb(n);
  for (std::size_t i = 0; i < n; ++i) {
    ra[i] = q.from_signed(ca[i]);
    rb[i] = q.from_signed(cb[i]);
  }
  const auto prod = negacyclic_schoolbook(q, ra, rb);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i)
    centered[i] = prod[i] > q.value() / 2 ? -static_cast<double>(q.value() - prod[i]) : static_cast<double>(prod[i]);
  const auto slots = enc.decode(centered, scale * scale);
  for (std::size_t j = 0; j < n / 2; ++j) EXPECT_NEAR(slots[j], a[j] * b[j], 1e-5);
}

TEST(Encoder, CapacityError) {
  const CanonicalEncoder enc(16);
  const std::vector<double> too_many(9, 1.0);
  EXPECT_THROW(enc.encode(too_many, 1024.0), Error);
}

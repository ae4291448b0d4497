// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "permhe/packing.hpp"
#include "test_util.hpp"

using namespace permhe;

TEST(EncodeMatrix, SingleElement) {
  const auto p = encode_matrix(SquareMatrix(1, {7}), 4);
  EXPECT_EQ(p.slots, (std::vector<double>{7, 0, 0, 0}));
  EXPECT_EQ(p.layout, (Layout{1, 1}));
}

TEST(EncodeMatrix, RowMajorLayout) {
  const auto p = encode_matrix(SquareMatrix(2, {1, 2, 3, 4}), 8);
  EXPECT_EQ(p.slots, (std::vector<double>{1, 2, 3, 4, 0, 0, 0, 0}));
  EXPECT_EQ(p.layout.used(), 4u);
}

TEST(EncodeMatrix, CapacityError) {
  try {
    encode_matrix(SquareMatrix(3), 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::capacity);
  }
}

TEST(EncodeBatch, SingleMatrixBatchEqualsEncodeMatrix) {
  Prng rng(1);
  const auto m = testutil::random_matrix(rng, 3);
  const std::vector<SquareMatrix> one{m};
  const auto a = encode_batch(one, 16);
  const auto b = encode_matrix(m, 16);
  EXPECT_EQ(a.slots, b.slots);
  EXPECT_EQ(a.layout, b.layout);
}

TEST(EncodeBatch, BatchMajorLayout) {
  const std::vector<SquareMatrix> ms{SquareMatrix(2, {1, 2, 3, 4}), SquareMatrix(2, {5, 6, 7, 8})};
  const auto p = encode_batch(ms, 8);
  EXPECT_EQ(p.slots, (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(p.layout, (Layout{2, 2}));
}

TEST(EncodeBatch, RejectsMixedOrdersAndOverflow) {
  const std::vector<SquareMatrix> mixed{SquareMatrix(2), SquareMatrix(3)};
  EXPECT_THROW(encode_batch(mixed, 64), Error);
  const std::vector<SquareMatrix> three(3, SquareMatrix(2));
  EXPECT_THROW(encode_batch(three, 8), Error);
}

TEST(DecodeMatrix, RejectsBatchedLayout) {
  const std::vector<SquareMatrix> ms(2, SquareMatrix(2));
  try {
    decode_matrix(encode_batch(ms, 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::layout);
  }
}

TEST(Packing, RoundtripIsBitExact) {
  Prng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(8);
    const auto m = testutil::random_matrix(rng, d, -1e6, 1e6);
    EXPECT_EQ(decode_matrix(encode_matrix(m, 64)), m);
    std::vector<SquareMatrix> batch;
    const std::size_t g = 1 + rng.below(64 / (d * d));
    for (std::size_t t = 0; t < g; ++t) batch.push_back(testutil::random_matrix(rng, d));
    EXPECT_EQ(decode_batch(encode_batch(batch, 64)), batch);
  }
}

TEST(Packing, UnusedSlotsAreZero) {
  Prng rng(3);
  const auto p = encode_matrix(testutil::random_matrix(rng, 3), 32);
  for (std::size_t i = p.layout.used(); i < p.slots.size(); ++i) EXPECT_EQ(p.slots[i], 0.0);
}

TEST(Packing, SlotwiseOpsCommuteWithPacking) {
  Prng rng(4);
  for (std::size_t g : {1u, 3u}) {
    std::vector<SquareMatrix> as, bs;
    for (std::size_t t = 0; t < g; ++t) {
      as.push_back(testutil::random_matrix(rng, 4));
      bs.push_back(testutil::random_matrix(rng, 4));
    }
    auto pa = encode_batch(as, 64);
    const auto pb = encode_batch(bs, 64);
    auto sum = pa, prod = pa;
    for (std::size_t i = 0; i < 64; ++i) {
      sum.slots[i] += pb.slots[i];
      prod.slots[i] *= pb.slots[i];
    }
    const auto sums = decode_batch(sum);
    const auto prods = decode_batch(prod);
    for (std::size_t t = 0; t < g; ++t)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
          EXPECT_EQ(sums[t](i, j), as[t](i, j) + bs[t](i, j));
          EXPECT_EQ(prods[t](i, j), as[t](i, j) * bs[t](i, j));
        }
  }
}

TEST(Packing, BatchingReducesPlaintextCountByG) {
  const std::size_t d = 4, slots = 64;
  for (std::size_t g : {1u, 2u, 4u}) {
    std::vector<SquareMatrix> ms(g, SquareMatrix::identity(d));
    std::size_t unbatched = 0;
    for (const auto& m : ms) {
      (void)encode_matrix(m, slots);
      ++unbatched;
    }
    const std::vector<PackedPlaintext> batched{encode_batch(ms, slots)};
    EXPECT_EQ(unbatched, g * batched.size());
  }
}

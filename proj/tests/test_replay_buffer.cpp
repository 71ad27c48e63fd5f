#include <gtest/gtest.h>

#include "tempcycle/random.hpp"
#include "tempcycle/replay_buffer.hpp"

using tempcycle::ReplayBuffer;

TEST(ReplayBuffer, FirstQueryReturnsItsArgument) {
  ReplayBuffer<int> buf(50, 1);
  EXPECT_EQ(buf.query(7), 7);
  EXPECT_EQ(buf.size(), 1u);
}

TEST(ReplayBuffer, FillsBeforeSwapping) {
  ReplayBuffer<int> buf(50, 2);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(buf.query(i), i);
  EXPECT_TRUE(buf.full());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(buf.items()[i], i);
  buf.query(50);
  EXPECT_EQ(buf.size(), 50u);
}

TEST(ReplayBuffer, NeverExceedsCapacity) {
  for (size_t cap : {1u, 3u, 50u}) {
    ReplayBuffer<int> buf(cap, cap);
    for (int i = 0; i < 500; ++i) {
      buf.query(i);
      ASSERT_LE(buf.size(), cap);
    }
  }
  EXPECT_THROW(ReplayBuffer<int>(0), std::invalid_argument);
}

TEST(ReplayBuffer, SwapHappensHalfTheTime) {
  ReplayBuffer<int> buf(50, 3);
  for (int i = 0; i < 50; ++i) buf.query(-1 - i);
  int incoming = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) incoming += buf.query(i) == i;
  EXPECT_NEAR(static_cast<double>(incoming) / trials, 0.5, 0.02);
}

TEST(ReplayBuffer, SwappedOutItemIsReplacedByIncoming) {
  ReplayBuffer<int> buf(4, 5);
  for (int i = 0; i < 4; ++i) buf.query(i);
  for (int i = 100; i < 200; ++i) {
    auto before = buf.items();
    const int out = buf.query(i);
    if (out == i) {
      EXPECT_EQ(buf.items(), before);
    } else {
      auto it = std::find(before.begin(), before.end(), out);
      ASSERT_NE(it, before.end());
      *it = i;
      EXPECT_EQ(buf.items(), before);
    }
  }
}

TEST(ReplayBuffer, StoredItemsAreDrawnUniformly) {
  ReplayBuffer<int> buf(5, 8);
  std::array<int, 5> counts{};
  for (int i = 0; i < 5; ++i) buf.query(i);
  for (int trial = 0; trial < 20000; ++trial) {
    // Refill slots so the returned value identifies its slot.
    std::vector<int> slots{0, 1, 2, 3, 4};
    buf.restore(slots, buf.rng_state());
    const int out = buf.query(-1);
    if (out >= 0) ++counts[out];
  }
  for (int c : counts) EXPECT_NEAR(c / 10000.0, 0.2, 0.03);
}

TEST(ReplayBuffer, RestoreContinuesIdentically) {
  ReplayBuffer<int> a(10, 9);
  for (int i = 0; i < 30; ++i) a.query(i);
  ReplayBuffer<int> b(10, 12345);
  b.restore(a.items(), a.rng_state());
  for (int i = 30; i < 200; ++i) EXPECT_EQ(a.query(i), b.query(i));
  EXPECT_THROW(b.restore(std::vector<int>(11), a.rng_state()), std::invalid_argument);
  EXPECT_THROW(b.restore({}, "garbage"), std::invalid_argument);
}

TEST(Random, HelpersAreStable) {
  std::mt19937_64 rng(0);
  for (int i = 0; i < 1000; ++i) {
    const double u = tempcycle::uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(tempcycle::uniform_index(rng, 7), 7u);
  }
  using tempcycle::Stream;
  EXPECT_NE(tempcycle::derive_seed(1, Stream::Init), tempcycle::derive_seed(1, Stream::Shuffle));
  EXPECT_NE(tempcycle::derive_seed(1, Stream::Shuffle, 0, 1), tempcycle::derive_seed(1, Stream::Shuffle, 1, 0));
  EXPECT_EQ(tempcycle::derive_seed(5, Stream::Buffer, 2), tempcycle::derive_seed(5, Stream::Buffer, 2));
}

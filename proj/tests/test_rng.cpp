#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lob/rng.hpp"

using lob::CounterRng;
using lob::StreamTag;

TEST(CounterRng, SameSeedSameDraws) {
  const CounterRng a(42), b(42);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    EXPECT_EQ(a.bits(i, StreamTag::price), b.bits(i, StreamTag::price));
  }
}

TEST(CounterRng, SeedsAndTagsDiffer) {
  const CounterRng a(1), b(2);
  int same_seed = 0, same_tag = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    same_seed += a.bits(i, StreamTag::side) == b.bits(i, StreamTag::side);
    same_tag += a.bits(i, StreamTag::side) == a.bits(i, StreamTag::price);
  }
  EXPECT_EQ(same_seed, 0);
  EXPECT_EQ(same_tag, 0);
}

TEST(CounterRng, UniformStaysInsideOpenInterval) {
  const CounterRng r(7);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(static_cast<std::uint64_t>(i), StreamTag::price);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(CounterRng, SplitIsDeterministicAndDistinct) {
  const CounterRng root(99);
  EXPECT_EQ(root.split(3).key(), root.split(3).key());
  std::set<std::uint64_t> keys;
  for (std::uint64_t k = 0; k < 100; ++k) keys.insert(root.split(k).key());
  keys.insert(root.key());
  EXPECT_EQ(keys.size(), 101u);
}

TEST(CounterRng, ConstexprEvaluation) {
  constexpr CounterRng r(5);
  constexpr std::uint64_t v = r.bits(10, StreamTag::time);
  EXPECT_EQ(v, CounterRng(5).bits(10, StreamTag::time));
}

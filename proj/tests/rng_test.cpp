#include "nlerg/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace nlerg;

TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::apply(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Uniform, OpenUnitInterval) {
  EXPECT_GT(uniform53(0, 0), 0.0);
  EXPECT_LT(uniform53(0xffffffff, 0xffffffff), 1.0);
  const CounterStream s(5, 0, 0, 0, 0);
  double sum = 0.0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform(static_cast<std::uint32_t>(i % 65536)) ;
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(Normal, Moments) {
  double m1 = 0, m2 = 0, m4 = 0;
  const int n = 200'000;
  for (int p = 0; p < n / 2; ++p) {
    const CounterStream s(9, static_cast<std::uint32_t>(p), 3, 0, 0);
    for (std::uint32_t k = 0; k < 2; ++k) {
      const double z = s.normal(k);
      m1 += z;
      m2 += z * z;
      m4 += z * z * z * z;
    }
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 0.01);
  EXPECT_NEAR(m2, 1.0, 0.02);
  EXPECT_NEAR(m4, 3.0, 0.1);
}

TEST(CounterStream, CoordinatesGiveDistinctBlocks) {
  std::set<Philox4x32::Counter> seen;
  seen.insert(CounterStream(1, 0, 0, 0, 0).block(0));
  seen.insert(CounterStream(2, 0, 0, 0, 0).block(0));
  seen.insert(CounterStream(1ull << 40, 0, 0, 0, 0).block(0));
  seen.insert(CounterStream(1, 1, 0, 0, 0).block(0));
  seen.insert(CounterStream(1, 0, 1, 0, 0).block(0));
  seen.insert(CounterStream(1, 0, 0, 1, 0).block(0));
  seen.insert(CounterStream(1, 0, 0, 0, 1).block(0));
  seen.insert(CounterStream(1, 0, 0, 0, 0).block(1));
  EXPECT_EQ(seen.size(), 8u);
}

TEST(CounterStream, Reproducible) {
  const CounterStream a(77, 4, 9, 2, 1), b(77, 4, 9, 2, 1);
  for (std::uint32_t k = 0; k < 10; ++k) EXPECT_EQ(a.normal(k), b.normal(k));
}

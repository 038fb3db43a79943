#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "flightwp/random.hpp"
#include "flightwp/stats.hpp"

using namespace flightwp;

TEST(Random, SameSeedSameStream) {
  Rng a(RandomSeed{42});
  Rng b(RandomSeed{42});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Random, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(RandomSeed{7}, i).value);
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_NE(derive_seed(RandomSeed{7}, 0).value, derive_seed(RandomSeed{8}, 0).value);
}

// Reference values of splitmix64 from seed 0 (published test vector).
TEST(Random, SplitmixReferenceVector) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64(state), 0x6E789E6AA1B965F4ULL);
}

TEST(Random, UniformStaysInsideOpenInterval) {
  Rng rng(RandomSeed{3});
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

// Closed-form moments: Exp(1) has mean 1, variance 1; N(0,1) mean 0, variance 1;
// Gamma(k,1) mean k, variance k.
TEST(Random, VariateMoments) {
  Rng rng(RandomSeed{11});
  constexpr int draws = 200000;
  RunningStats e, z, g, small;
  for (int i = 0; i < draws; ++i) {
    e.add(rng.exponential());
    z.add(rng.normal());
    g.add(rng.gamma(7.5));
    small.add(rng.gamma(0.4));
  }
  EXPECT_NEAR(e.mean(), 1.0, 4.0 * e.stderr_mean());
  EXPECT_NEAR(e.variance(), 1.0, 0.03);
  EXPECT_NEAR(z.mean(), 0.0, 4.0 * z.stderr_mean());
  EXPECT_NEAR(z.variance(), 1.0, 0.02);
  EXPECT_NEAR(g.mean(), 7.5, 4.0 * g.stderr_mean());
  EXPECT_NEAR(g.variance(), 7.5, 0.2);
  EXPECT_NEAR(small.mean(), 0.4, 4.0 * small.stderr_mean());
}

TEST(Stats, WelfordMatchesTwoPass) {
  const std::vector<double> xs{1.0, 4.0, 9.0, 16.0, 25.0};
  RunningStats s;
  for (double x : xs) s.add(x);
  EXPECT_DOUBLE_EQ(s.mean(), 11.0);
  // Two-pass: Σ(x-11)² = 100+49+4+25+196 = 374, /4.
  EXPECT_DOUBLE_EQ(s.variance(), 93.5);
}

TEST(Stats, QuantileAndSlope) {
  std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_EQ(quantile(v, 0.0), 1.0);
  EXPECT_EQ(quantile(v, 0.5), 3.0);
  EXPECT_EQ(quantile(v, 1.0), 5.0);
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1, -1, -3, -5};
  EXPECT_DOUBLE_EQ(ols_slope(x, y), -2.0);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "icdlab/digest.hpp"
#include "icdlab/random.hpp"

using namespace icdlab;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.uniform(), b.uniform());
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Rng, UniformInRange) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, BelowCoversRange) {
  Rng r(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(Rng, NormalMoments) {
  Rng r(9);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.02);
}

TEST(Rng, SampleWithoutReplacementIsDistinct) {
  Rng r(5);
  const auto s = r.sample_without_replacement(100, 40);
  ASSERT_EQ(s.size(), 40u);
  EXPECT_EQ(std::set<size_t>(s.begin(), s.end()).size(), 40u);
  EXPECT_TRUE(std::all_of(s.begin(), s.end(), [](size_t v) { return v < 100; }));
  EXPECT_EQ(Rng(5).sample_without_replacement(100, 100).size(), 100u);
}

TEST(Seeds, DeriveSeedSeparatesCoordinates) {
  EXPECT_NE(derive_seed(1, {0, 1}), derive_seed(1, {1, 0}));
  EXPECT_NE(derive_seed(1, {0}), derive_seed(2, {0}));
  EXPECT_EQ(derive_seed(1, {3, 4}), derive_seed(1, {3, 4}));
  EXPECT_NE(derive_seed(1, "gold"), derive_seed(1, "pool"));
}

TEST(Digest, KnownFnvValues) {
  // FNV-1a 64 reference values
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex_digest("a"), "af63dc4c8601ec8c");
}

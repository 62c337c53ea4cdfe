#include "mprf/shamir.h"

#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "mprf/errors.h"

namespace mprf {
namespace {

TEST(ShamirTest, RoundTripSweep) {
  Field f(Field::kMersenne61);
  CounterRng rng(11);
  for (uint64_t s = 0; s < 100; ++s) {
    FieldElement secret = f.FromUint(s * 7919 + 3);
    ShareVector sv = ShamirShare(f, secret, 2, 5, rng);
    ASSERT_EQ(ShamirReconstruct(f, sv), secret);
  }
}

TEST(ShamirTest, ZeroCoefficientGivesConstantShares) {
  Field f(101);
  std::vector<FieldElement> coeffs = {FieldElement(0)};
  ShareVector sv = ShamirShareWithCoefficients(f, FieldElement(42), coeffs, 3);
  for (int i = 1; i <= 3; ++i) EXPECT_EQ(sv.point(i), FieldElement(42));
}

TEST(ShamirTest, SingleShareUniformSmallPrime) {
  Field f(101);
  CounterRng rng(3);
  std::vector<int> counts(101, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    ShareVector sv = ShamirShare(f, FieldElement(17), 1, 3, rng);
    ++counts[static_cast<size_t>(sv.point(2).value())];
  }
  double expected = draws / 101.0, stat = 0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  // chi-square(100) upper 1% point.
  EXPECT_LT(stat, 135.807);
}

TEST(ShamirTest, ExhaustiveHidingSmallPrime) {
  const int p = 101;
  Field f(p);
  // t = 2: any two shares are jointly uniform, for any secret.
  auto joint_counts = [&](int secret, int a, int b) {
    std::map<std::pair<uint64_t, uint64_t>, int> counts;
    for (int c1 = 0; c1 < p; ++c1) {
      for (int c2 = 0; c2 < p; ++c2) {
        std::vector<FieldElement> coeffs = {FieldElement(c1), FieldElement(c2)};
        ShareVector sv = ShamirShareWithCoefficients(f, FieldElement(secret), coeffs, 4);
        ++counts[{static_cast<uint64_t>(sv.point(a).value()),
                  static_cast<uint64_t>(sv.point(b).value())}];
      }
    }
    return counts;
  };
  auto c0 = joint_counts(0, 1, 3);
  auto c1 = joint_counts(57, 1, 3);
  EXPECT_EQ(c0, c1);
  EXPECT_EQ(c0.size(), static_cast<size_t>(p * p));
}

TEST(ShamirTest, ReconstructKnownPolynomial) {
  Field f(101);
  std::vector<Share> shares;
  for (int x = 1; x <= 3; ++x) {
    shares.push_back({x, FieldElement(static_cast<uint128>((7 + 3 * x + 5 * x * x) % 101))});
  }
  EXPECT_EQ(ShamirReconstruct(f, shares, 2), FieldElement(7));
}

TEST(ShamirTest, ZeroSecret) {
  Field f(Field::kMersenne127);
  CounterRng rng(1);
  EXPECT_EQ(ShamirReconstruct(f, ShamirShare(f, FieldElement(0), 1, 3, rng)), FieldElement(0));
}

TEST(ShamirTest, AnySubsetAgrees) {
  Field f(Field::kMersenne61);
  CounterRng rng(8);
  ShareVector sv = ShamirShare(f, FieldElement(123456789), 2, 5, rng);
  std::vector<Share> all = sv.shares();
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      for (int c = b + 1; c < 5; ++c) {
        std::vector<Share> subset = {all[a], all[b], all[c]};
        ASSERT_EQ(ShamirReconstruct(f, subset, 2), FieldElement(123456789));
      }
    }
  }
}

TEST(ShamirTest, TooFewSharesThrows) {
  Field f(101);
  CounterRng rng(2);
  ShareVector sv = ShamirShare(f, FieldElement(5), 2, 4, rng);
  std::vector<Share> two = {sv.share(1), sv.share(2)};
  EXPECT_THROW(ShamirReconstruct(f, two, 2), InsufficientShares);
}

TEST(ShamirTest, InconsistentRedundantShareThrows) {
  Field f(101);
  CounterRng rng(2);
  ShareVector sv = ShamirShare(f, FieldElement(5), 1, 4, rng);
  std::vector<Share> all = sv.shares();
  all[3].point = f.Add(all[3].point, FieldElement(1));
  EXPECT_THROW(ShamirReconstruct(f, all, 1), IntegrityError);
}

TEST(ShamirTest, BadParametersThrow) {
  Field f(101);
  CounterRng rng(2);
  EXPECT_THROW(ShamirShare(f, FieldElement(1), 0, 3, rng), ConfigError);
  EXPECT_THROW(ShamirShare(f, FieldElement(1), 3, 3, rng), ConfigError);
  EXPECT_THROW(ShamirShare(Field(7), FieldElement(1), 2, 7, rng), ConfigError);
}

TEST(ShareLinearTest, IdentityAndSum) {
  Field f(Field::kMersenne61);
  CounterRng rng(4);
  ShareVector x = ShamirShare(f, FieldElement(10), 1, 3, rng);
  ShareVector y = ShamirShare(f, FieldElement(32), 1, 3, rng);
  LinearTerm id[] = {{FieldElement(1), &x}};
  EXPECT_EQ(ShamirReconstruct(f, ShareLinear(f, FieldElement(0), id)), FieldElement(10));
  LinearTerm sum[] = {{FieldElement(1), &x}, {FieldElement(1), &y}};
  EXPECT_EQ(ShamirReconstruct(f, ShareLinear(f, FieldElement(0), sum)), FieldElement(42));
}

TEST(ShareLinearTest, AffineExample) {
  Field f(Field::kMersenne61);
  CounterRng rng(6);
  ShareVector three = ShamirShare(f, FieldElement(3), 1, 3, rng);
  ShareVector four = ShamirShare(f, FieldElement(4), 1, 3, rng);
  LinearTerm terms[] = {{FieldElement(2), &three}, {f.Neg(FieldElement(1)), &four}};
  ShareVector out = ShareLinear(f, FieldElement(5), terms);
  EXPECT_EQ(ShamirReconstruct(f, out), FieldElement(7));
  EXPECT_EQ(out.degree(), 1);
}

TEST(ShareLinearTest, RandomAffineMapsCommute) {
  Field f(Field::kMersenne127);
  CounterRng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    FieldElement a = rng.NextField(f), b = rng.NextField(f);
    FieldElement ca = rng.NextField(f), cb = rng.NextField(f), c0 = rng.NextField(f);
    ShareVector sa = ShamirShare(f, a, 2, 5, rng), sb = ShamirShare(f, b, 2, 5, rng);
    LinearTerm terms[] = {{ca, &sa}, {cb, &sb}};
    ShareVector out = ShareLinear(f, c0, terms);
    ASSERT_EQ(out.degree(), 2);
    ASSERT_EQ(ShamirReconstruct(f, out), f.Add(c0, f.Add(f.Mul(ca, a), f.Mul(cb, b))));
    // Degree stays t: the redundant shares remain consistent.
    std::vector<Share> all = out.shares();
    ASSERT_NO_THROW(ShamirReconstruct(f, all, 2));
  }
}

TEST(ShareLinearTest, MismatchedSharingsThrow) {
  Field f(101);
  CounterRng rng(1);
  ShareVector a = ShamirShare(f, FieldElement(1), 1, 3, rng);
  ShareVector b = ShamirShare(f, FieldElement(1), 2, 3, rng);
  ShareVector c = ShamirShare(f, FieldElement(1), 1, 4, rng);
  LinearTerm ab[] = {{FieldElement(1), &a}, {FieldElement(1), &b}};
  LinearTerm ac[] = {{FieldElement(1), &a}, {FieldElement(1), &c}};
  EXPECT_THROW(ShareLinear(f, FieldElement(0), ab), ConfigError);
  EXPECT_THROW(ShareLinear(f, FieldElement(0), ac), ConfigError);
}

}  // namespace
}  // namespace mprf

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mrsig/errors.hpp"
#include "mrsig/sigcore.hpp"
#include "oracles.hpp"

using namespace mrsig;

namespace {

TruncatedSignature seg(std::vector<double> inc, std::size_t p) { return segment_signature(inc, p); }

void expect_level(const TruncatedSignature& s, std::size_t k, std::vector<double> want, double tol = 0.0) {
  const auto got = s.level_coefficients(k);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "level " << k << " index " << i;
}

}  // namespace

TEST(TruncatedSignature, LayoutAndIdentity) {
  const TruncatedSignature id(3, 2);
  EXPECT_EQ(id.size(), 13u);
  EXPECT_EQ(id.level_coefficients(2).size(), 9u);
  EXPECT_EQ(id.at({}), 1.0);
  for (double c : id.flatten_without_constant()) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(signature_feature_count(3, 2), 12u);
  EXPECT_EQ(signature_feature_count(2, 3), 14u);
}

TEST(TruncatedSignature, RejectsBadCoefficientVectors) {
  EXPECT_THROW(TruncatedSignature(2, 1, {1.0, 0.0}), InvalidArgument);
  EXPECT_THROW(TruncatedSignature(2, 1, {0.5, 0.0, 0.0}), InvalidArgument);
  EXPECT_NO_THROW(TruncatedSignature(2, 1, {1.0, 0.25, -3.0}));
}

TEST(SegmentSignature, ClosedFormExamples) {
  const auto s = seg({2.0, 0.0}, 2);
  expect_level(s, 0, {1.0});
  expect_level(s, 1, {2.0, 0.0});
  expect_level(s, 2, {2.0, 0.0, 0.0, 0.0});

  EXPECT_EQ(seg({0.0, 0.0}, 2), TruncatedSignature::identity(2, 2));

  const auto t = seg({1.0, -1.0, 0.5}, 3);
  EXPECT_DOUBLE_EQ(t.at({0, 1, 2}), -1.0 / 12.0);
}

TEST(SegmentSignature, LevelOneIsTheIncrementExactly) {
  const std::vector<double> inc{0.1, -7.25, 1e-300};
  const auto s = segment_signature(inc, 3);
  const auto l1 = s.level_coefficients(1);
  for (std::size_t i = 0; i < inc.size(); ++i) EXPECT_EQ(l1[i], inc[i]);
}

TEST(SegmentSignature, MatchesNestedSumsOnAStraightLine) {
  Matrix line{{0.0, 0.0, 0.0}, {1.0, -1.0, 0.5}};
  const auto ref = oracle::riemann_signature(line, 3, 4000);
  const auto s = seg({1.0, -1.0, 0.5}, 3);
  for (std::size_t k = 0; k <= 3; ++k) {
    const auto got = s.level_coefficients(k);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], ref[k][i], 1e-8);
  }
  EXPECT_NEAR(ref[3][0 * 9 + 1 * 3 + 2], -1.0 / 12.0, 1e-8);
}

TEST(SegmentSignature, RejectsNonFiniteIncrements) {
  EXPECT_THROW(seg({1.0, std::numeric_limits<double>::quiet_NaN()}, 2), InvalidArgument);
  EXPECT_THROW(seg({std::numeric_limits<double>::infinity()}, 2), InvalidArgument);
  EXPECT_THROW(seg({1.0}, 0), InvalidArgument);
  EXPECT_THROW(seg({}, 2), InvalidArgument);
}

TEST(ChenProduct, IdentityIsNeutral) {
  const auto b = seg({0.3, -1.2}, 3);
  EXPECT_EQ(chen_product(TruncatedSignature::identity(2, 3), b), b);
  EXPECT_EQ(chen_product(b, TruncatedSignature::identity(2, 3)), b);
}

TEST(ChenProduct, OppositeSegmentsCancel) {
  const auto prod = chen_product(seg({1.0, 0.0}, 2), seg({-1.0, 0.0}, 2));
  EXPECT_EQ(prod, TruncatedSignature::identity(2, 2));
}

TEST(ChenProduct, LShapedPathLevelTwo) {
  const auto prod = chen_product(seg({1.0, 0.0}, 2), seg({0.0, 1.0}, 2));
  expect_level(prod, 1, {1.0, 1.0});
  expect_level(prod, 2, {0.5, 1.0, 0.0, 0.5});

  Matrix l{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}};
  const auto ref = oracle::riemann_signature(l, 2, 1000);
  const auto got = prod.level_coefficients(2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(got[i], ref[2][i], 1e-12);
}

TEST(ChenProduct, RejectsMismatchedShapes) {
  EXPECT_THROW(chen_product(seg({1.0, 0.0}, 2), seg({1.0, 0.0, 0.0}, 2)), InvalidArgument);
  EXPECT_THROW(chen_product(seg({1.0, 0.0}, 2), seg({1.0, 0.0}, 3)), InvalidArgument);
}

TEST(StreamSignature, LShapedPoints) {
  const auto s = stream_signature(Matrix{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}}, 2);
  expect_level(s, 1, {1.0, 1.0});
  expect_level(s, 2, {0.5, 1.0, 0.0, 0.5});
}

TEST(StreamSignature, ConstantPointsGiveIdentity) {
  const double c = 3.7;
  EXPECT_EQ(stream_signature(Matrix{{c, c}, {c, c}, {c, c}}, 3), TruncatedSignature::identity(2, 3));
}

TEST(StreamSignature, LevelOneIsTotalIncrement) {
  mrsig::Rng rng(11);
  const auto path = oracle::random_path(9, 3, rng);
  const auto s = stream_signature(path, 2);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s.at({j}), path(8, j) - path(0, j), 1e-12);
}

TEST(StreamSignature, MidpointInsertionLeavesSignatureUnchanged) {
  const Matrix coarse{{0.0, 1.0}, {2.0, -1.0}, {3.0, 4.0}};
  const Matrix fine{{0.0, 1.0}, {1.0, 0.0}, {2.0, -1.0}, {2.5, 1.5}, {3.0, 4.0}};
  EXPECT_LT(oracle::relative_gap(stream_signature(coarse, 3), stream_signature(fine, 3)), 1e-12);
}

TEST(StreamSignature, NeedsTwoPoints) {
  EXPECT_THROW(stream_signature(Matrix{{1.0, 2.0}}, 2), InsufficientData);
  EXPECT_THROW(stream_signature(Matrix{}, 2), InsufficientData);
}

TEST(StreamSignature, ChenIdentityOnRandomSplits) {
  mrsig::Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + mrsig::uniform_index(rng, 4);
    const std::size_t n = 3 + mrsig::uniform_index(rng, 18);
    const std::size_t p = 1 + mrsig::uniform_index(rng, 3);
    const auto path = oracle::random_path(n, d, rng);
    const std::size_t cut = 1 + mrsig::uniform_index(rng, n - 2);
    Matrix left, right;
    for (std::size_t i = 0; i <= cut; ++i) left.append_row(path.row(i));
    for (std::size_t i = cut; i < n; ++i) right.append_row(path.row(i));
    const auto joined = chen_product(stream_signature(left, p), stream_signature(right, p));
    EXPECT_LT(oracle::relative_gap(stream_signature(path, p), joined), 1e-12) << "trial " << trial;
  }
}

TEST(StreamSignature, ShuffleRelationAtLevelTwo) {
  mrsig::Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + mrsig::uniform_index(rng, 4);
    const std::size_t n = 2 + mrsig::uniform_index(rng, 19);
    const auto s = stream_signature(oracle::random_path(n, d, rng), 2);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double lhs = s.at({i, j}) + s.at({j, i});
        const double rhs = s.at({i}) * s.at({j});
        EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
      }
    }
  }
}

TEST(StreamSignature, ReversedPathIsTheInverse) {
  mrsig::Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + mrsig::uniform_index(rng, 4);
    const std::size_t n = 2 + mrsig::uniform_index(rng, 10);
    const std::size_t p = 1 + mrsig::uniform_index(rng, 3);
    const auto path = oracle::random_path(n, d, rng);
    Matrix rev;
    for (std::size_t i = n; i-- > 0;) rev.append_row(path.row(i));
    const auto fwd = stream_signature(path, p);
    const auto prod = chen_product(fwd, stream_signature(rev, p));
    for (std::size_t k = 1; k <= p; ++k) {
      // Every product coefficient is a sum of k+1 terms bounded by this scale.
      double scale = 0.0;
      for (std::size_t j = 0; j <= k; ++j)
        scale += oracle::max_abs(fwd.level_coefficients(j)) * oracle::max_abs(fwd.level_coefficients(k - j));
      for (double c : prod.level_coefficients(k)) EXPECT_LE(std::abs(c), 1e-12 * std::max(1.0, scale));
    }
  }
}

TEST(StreamSignature, MatchesNestedSumOracle) {
  mrsig::Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + mrsig::uniform_index(rng, 5);
    const std::size_t p = 1 + mrsig::uniform_index(rng, 3);
    const auto path = oracle::random_path(n, 2, rng);
    const auto ref = oracle::riemann_signature(path, p, 2000);
    const auto s = stream_signature(path, p);
    for (std::size_t k = 0; k <= p; ++k) {
      const auto got = s.level_coefficients(k);
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], ref[k][i], 1e-6);
    }
  }
}

TEST(TruncatedSignature, MultiIndexLookupMatchesLayout) {
  const auto s = stream_signature(Matrix{{0, 0, 0}, {1, 2, 3}, {0, 5, -1}}, 3);
  const auto l3 = s.level_coefficients(3);
  EXPECT_EQ(s.at({2, 0, 1}), l3[2 * 9 + 0 * 3 + 1]);
  EXPECT_THROW(s.at({3}), InvalidArgument);
  EXPECT_THROW(s.at({0, 0, 0, 0}), InvalidArgument);
}

#include "decom/error.hpp"
#include "decom/tensor.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace decom {
namespace {

TEST(Tensor3, LayoutIsLocationFeatureTime) {
  Tensor3 x(2, 3, 4);
  x(1, 2, 3) = 7.0;
  EXPECT_EQ(x.values()[(1 * 3 + 2) * 4 + 3], 7.0);
  EXPECT_EQ(x.size(), 24u);
  EXPECT_EQ(x.at(1, 2, 3), 7.0);
  EXPECT_THROW(static_cast<void>(x.at(2, 0, 0)), ContractViolation);
}

TEST(Tensor3, RejectsZeroDimsAndWrongLength) {
  EXPECT_THROW(Tensor3(0, 1, 1), ContractViolation);
  EXPECT_THROW(Tensor3(Dims{2, 2, 2}, std::vector<double>(7)), ContractViolation);
}

TEST(Tensor3, TimeSliceAndFeatureSelect) {
  auto x = testing_oracles::random_tensor(3, 4, 5, 1);
  const Tensor3 s = x.time_slice(1, 4);
  ASSERT_EQ(s.times(), 3u);
  EXPECT_EQ(s(2, 3, 0), x(2, 3, 1));
  const std::vector<std::size_t> pick{3, 0};
  const Tensor3 f = x.select_features(pick);
  EXPECT_EQ(f.features(), 2u);
  EXPECT_EQ(f(1, 0, 4), x(1, 3, 4));
  EXPECT_EQ(f(1, 1, 4), x(1, 0, 4));
}

TEST(Unfold, ZeroTensorModeOne) {
  const Matrix u = unfold(Tensor3(2, 2, 2), 1);
  EXPECT_EQ(u.rows(), 4);
  EXPECT_EQ(u.cols(), 2);
  EXPECT_TRUE(u.isZero(0.0));
}

TEST(Unfold, RankOneByHand) {
  // (c kr b) a^T with a=[1,2], b=[3,4], c=[5,6].
  FactorSet f;
  f.a = Matrix{{1.0}, {2.0}};
  f.b = Matrix{{3.0}, {4.0}};
  f.c = Matrix{{5.0}, {6.0}};
  const Matrix u = unfold(reconstruct(f), 1);
  ASSERT_EQ(u.rows(), 4);
  const std::vector<double> col0{15, 20, 18, 24}, col1{30, 40, 36, 48};
  for (int r = 0; r < 4; ++r) {
    EXPECT_DOUBLE_EQ(u(r, 0), col0[r]);
    EXPECT_DOUBLE_EQ(u(r, 1), col1[r]);
  }
}

TEST(Unfold, ShapesPerMode) {
  const auto x = testing_oracles::random_tensor(2, 3, 4, 2);
  EXPECT_EQ(unfold(x, 1).rows(), 12);
  EXPECT_EQ(unfold(x, 1).cols(), 2);
  EXPECT_EQ(unfold(x, 2).rows(), 8);
  EXPECT_EQ(unfold(x, 2).cols(), 3);
  EXPECT_EQ(unfold(x, 3).rows(), 6);
  EXPECT_EQ(unfold(x, 3).cols(), 4);
}

TEST(Unfold, InvalidModeThrows) {
  const Tensor3 x(2, 2, 2);
  EXPECT_THROW(unfold(x, 0), ContractViolation);
  EXPECT_THROW(unfold(x, 4), ContractViolation);
  EXPECT_THROW(fold(Matrix::Zero(4, 2), 5, x.dims()), ContractViolation);
}

TEST(Unfold, FoldInvertsEveryModeExactly) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    const auto x = testing_oracles::random_tensor(dim(rng), dim(rng), dim(rng), seed);
    for (int mode = 1; mode <= 3; ++mode) EXPECT_EQ(fold(unfold(x, mode), mode, x.dims()), x);
  }
}

TEST(Unfold, MatchesRoleSymmetricFormulas) {
  const auto f = testing_oracles::random_factors(3, 4, 5, 2, 9, false);
  const Tensor3 x = testing_oracles::reconstruct_loops(f);
  EXPECT_TRUE(unfold(x, 1).isApprox(khatri_rao(f.c, f.b) * f.a.transpose(), 1e-12));
  EXPECT_TRUE(unfold(x, 2).isApprox(khatri_rao(f.c, f.a) * f.b.transpose(), 1e-12));
  EXPECT_TRUE(unfold(x, 3).isApprox(khatri_rao(f.b, f.a) * f.c.transpose(), 1e-12));
}

TEST(Unfold, PreservesFrobeniusNorm) {
  const auto x = testing_oracles::random_tensor(4, 3, 5, 4);
  for (int mode = 1; mode <= 3; ++mode) EXPECT_NEAR(frobenius_norm(unfold(x, mode)), frobenius_norm(x), 1e-12);
}

TEST(KhatriRao, ColumnVectors) {
  const Matrix r = khatri_rao(Matrix{{1.0}, {2.0}}, Matrix{{3.0}, {4.0}});
  const Matrix expect{{3.0}, {4.0}, {6.0}, {8.0}};
  EXPECT_EQ(r, expect);
}

TEST(KhatriRao, OnesStacksB) {
  const Matrix b{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  const Matrix r = khatri_rao(Matrix::Ones(2, 2), b);
  EXPECT_EQ(r.topRows(3), b);
  EXPECT_EQ(r.bottomRows(3), b);
}

TEST(KhatriRao, Identities) {
  const Matrix r = khatri_rao(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  Matrix expect = Matrix::Zero(4, 2);
  expect(0, 0) = 1.0;
  expect(3, 1) = 1.0;
  EXPECT_EQ(r, expect);
}

TEST(KhatriRao, ColumnMismatchThrows) {
  EXPECT_THROW(khatri_rao(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), ContractViolation);
}

TEST(KhatriRao, ColumnNormsMultiply) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(4, 3), b(5, 3);
  for (auto& v : a.reshaped()) v = n(rng);
  for (auto& v : b.reshaped()) v = n(rng);
  const Matrix r = khatri_rao(a, b);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.col(k).norm(), a.col(k).norm() * b.col(k).norm(), 1e-12);
}

TEST(KhatriRao, MatchesKroneckerOracle) {
  const auto f = testing_oracles::random_factors(3, 4, 1, 2, 5, false);
  const Matrix r = khatri_rao(f.a, f.b);
  for (int k = 0; k < 2; ++k) {
    const auto kron = testing_oracles::kronecker(f.a.col(k), f.b.col(k));
    for (Eigen::Index i = 0; i < r.rows(); ++i) EXPECT_DOUBLE_EQ(r(i, k), kron[static_cast<std::size_t>(i)]);
  }
}

TEST(Reconstruct, UnitRankOne) {
  FactorSet f{Matrix{{1.0}, {0.0}}, Matrix{{1.0}}, Matrix{{1.0}}};
  const Tensor3 x = reconstruct(f);
  EXPECT_EQ(x.dims(), (Dims{2, 1, 1}));
  EXPECT_EQ(x(0, 0, 0), 1.0);
  EXPECT_EQ(x(1, 0, 0), 0.0);
}

TEST(Reconstruct, ZeroFactors) {
  FactorSet f{Matrix::Zero(3, 2), Matrix::Zero(2, 2), Matrix::Zero(4, 2)};
  EXPECT_EQ(reconstruct(f), Tensor3(3, 2, 4));
}

TEST(Reconstruct, MatchesTripleLoopOracle) {
  const auto f = testing_oracles::random_factors(3, 2, 4, 2, 17, true);
  const Tensor3 fast = reconstruct(f);
  const Tensor3 slow = testing_oracles::reconstruct_loops(f);
  EXPECT_LT(testing_oracles::relative_error(fast, slow), 1e-12);
}

TEST(Reconstruct, InconsistentRanksThrow) {
  FactorSet f{Matrix::Zero(3, 2), Matrix::Zero(2, 1), Matrix::Zero(4, 2)};
  EXPECT_THROW(reconstruct(f), ContractViolation);
}

TEST(Frobenius, Basics) {
  EXPECT_EQ(frobenius_norm(Tensor3(2, 2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(Tensor3(Dims{1, 1, 2}, {3.0, 4.0})), 5.0);
  auto x = testing_oracles::random_tensor(3, 3, 3, 8);
  const double n = frobenius_norm(x);
  EXPECT_GT(n, 0.0);
  for (auto& v : x.values()) v *= -2.5;
  EXPECT_NEAR(frobenius_norm(x), 2.5 * n, 1e-12);
}

}  // namespace
}  // namespace decom

#include "decom/error.hpp"
#include "decom/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace decom {
namespace {

std::vector<double> random_series(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

TEST(Metrics, HandComputedPair) {
  const std::vector<double> a{0.0, 0.0}, p{3.0, 4.0};
  EXPECT_NEAR(rmse(a, p), std::sqrt(12.5), 1e-12);
  EXPECT_NEAR(mae(a, p), 3.5, 1e-12);
}

TEST(Metrics, IdenticalAndSingleElement) {
  const std::vector<double> a{1.0, -2.0, 5.5};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_EQ(mae(a, a), 0.0);
  const std::vector<double> x{2.0}, y{-1.5};
  EXPECT_DOUBLE_EQ(rmse(x, y), 3.5);
  EXPECT_DOUBLE_EQ(mae(x, y), 3.5);
}

TEST(Metrics, LengthMismatchAndEmptyThrow) {
  const std::vector<double> a{1.0, 2.0}, b{1.0}, e;
  EXPECT_THROW(rmse(a, b), ContractViolation);
  EXPECT_THROW(mae(a, b), ContractViolation);
  EXPECT_THROW(rmse(e, e), ContractViolation);
}

TEST(Metrics, RandomPairProperties) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_series(1 + static_cast<std::size_t>(i % 17), rng);
    const auto p = random_series(a.size(), rng);
    const double r = rmse(a, p), m = mae(a, p);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, r + 1e-12);
    EXPECT_DOUBLE_EQ(r, rmse(p, a));
    EXPECT_DOUBLE_EQ(m, mae(p, a));
  }
}

TEST(PeakDiff, Examples) {
  std::vector<double> a(20, 0.0), p(20, 0.0);
  a[10] = 5.0;
  p[12] = 5.0;
  EXPECT_EQ(peak_diff(a, p), 2);
  EXPECT_EQ(peak_diff(p, a), -2);
  EXPECT_EQ(peak_diff(a, a), 0);
  const std::vector<double> flat(20, 1.0);
  EXPECT_EQ(peak_index(flat), 0u);
  EXPECT_EQ(peak_diff(a, flat), -10);
  EXPECT_THROW(peak_index(std::vector<double>{}), ContractViolation);
}

TEST(PeakDiff, AntisymmetricForUniquePeaks) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_series(30, rng), p = random_series(30, rng);
    EXPECT_EQ(peak_diff(a, p), -peak_diff(p, a));
  }
}

TEST(Aggregate, SumsLocations) {
  Tensor3 x(2, 1, 2);
  x(0, 0, 0) = 1;
  x(0, 0, 1) = 2;
  x(1, 0, 0) = 3;
  x(1, 0, 1) = 4;
  EXPECT_EQ(aggregate_country(x, 0), (std::vector<double>{4, 6}));
  const Matrix single{{1.0, 7.0, 2.0}};
  EXPECT_EQ(aggregate_country(single), (std::vector<double>{1, 7, 2}));
  EXPECT_THROW(aggregate_country(x, 1), ContractViolation);
}

TEST(Aggregate, Linear) {
  Matrix m = Matrix::Random(4, 6);
  const auto base = aggregate_country(m);
  const auto scaled = aggregate_country(Matrix(2.5 * m));
  for (std::size_t t = 0; t < base.size(); ++t) EXPECT_NEAR(scaled[t], 2.5 * base[t], 1e-12);
}

TEST(Summary, PopulationSd) {
  const std::vector<double> v{1.0, 3.0};
  const MetricSummary s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.sd, 1.0);
}

TEST(Evaluate, PerfectForecastIsAllZero) {
  const Matrix a = Matrix::Random(3, 52).cwiseAbs();
  const EvalReport r = evaluate(a, a, {12, 24, 52}, "m", {"a", "b", "c"});
  ASSERT_EQ(r.horizons.size(), 3u);
  for (const auto& h : r.horizons) {
    EXPECT_EQ(h.rmse_summary.mean, 0.0);
    EXPECT_EQ(h.mae_summary.sd, 0.0);
    EXPECT_EQ(h.country_rmse, 0.0);
  }
  EXPECT_EQ(r.peak_diff, 0);
  EXPECT_EQ(r.sd_convention, "population");
}

TEST(Evaluate, OneLocationHorizonOne) {
  const Matrix a{{2.0, 9.0}}, p{{5.0, 0.0}};
  const EvalReport r = evaluate(a, p, {1}, "m", {"x"});
  EXPECT_DOUBLE_EQ(r.horizons[0].rmse[0], 3.0);
  EXPECT_DOUBLE_EQ(r.horizons[0].mae_summary.mean, 3.0);
  EXPECT_DOUBLE_EQ(r.horizons[0].country_rmse, 3.0);
}

TEST(Evaluate, HorizonRestrictsWindow) {
  Matrix a = Matrix::Zero(2, 6), p = Matrix::Zero(2, 6);
  p(0, 4) = 10.0;
  const EvalReport r = evaluate(a, p, {2, 6}, "m", {});
  EXPECT_EQ(r.horizons[0].rmse_summary.mean, 0.0);
  EXPECT_GT(r.horizons[1].rmse_summary.mean, 0.0);
  EXPECT_DOUBLE_EQ(r.horizons[1].rmse[0], std::sqrt(100.0 / 6.0));
  EXPECT_EQ(r.location_peak_diff[0], 4);
}

TEST(Evaluate, HorizonBeyondDataThrows) {
  const Matrix a = Matrix::Zero(2, 10);
  EXPECT_THROW(evaluate(a, a, {12}, "m", {}), ContractViolation);
  EXPECT_THROW(evaluate(a, a, {}, "m", {}), ContractViolation);
  EXPECT_THROW(evaluate(a, Matrix::Zero(3, 10), {5}, "m", {}), ContractViolation);
}

}  // namespace
}  // namespace decom

#include "decom/baselines.hpp"
#include "decom/error.hpp"

#include <gtest/gtest.h>

namespace decom {
namespace {

ScenarioConfig small_scenario(std::uint64_t seed) {
  ScenarioConfig s;
  s.locations = 3;
  s.weeks = 200;
  s.test_weeks = 26;
  s.npi_start = 140;
  s.npi_end = 160;
  s.climate_features = 1;
  s.seed = seed;
  return s;
}

TEST(SeasonalNaive, RepeatsLastPeriod) {
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_EQ(seasonal_naive(s, 2, 4), (std::vector<double>{3, 4, 3, 4}));
  EXPECT_EQ(seasonal_naive(s, 4, 6), (std::vector<double>{1, 2, 3, 4, 1, 2}));
  EXPECT_TRUE(seasonal_naive(s, 4, 0).empty());
}

TEST(SeasonalNaive, ConstantSeries) {
  const std::vector<double> s(10, 2.5);
  for (double v : seasonal_naive(s, 3, 11)) EXPECT_EQ(v, 2.5);
}

TEST(SeasonalNaive, ShortSeriesRejected) {
  const std::vector<double> s{1, 2};
  EXPECT_THROW(seasonal_naive(s, 3, 1), PreconditionError);
  EXPECT_THROW(seasonal_naive(s, 0, 1), PreconditionError);
}

TEST(SeasonalNaive, PeriodicPanelForecastExactly) {
  ScenarioConfig s = small_scenario(2);
  s.suppression = 0.0;
  s.resurgence_shift = 0.0;
  s.noise = 0.0;
  const PanelDataset d = generate_scenario(s);
  BaselineConfig cfg;
  cfg.kind = BaselineKind::kSeasonalNaive;
  const Tensor3 p = forecast_baseline(fit_baseline(d, cfg), d.test_length());
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t t = 0; t < d.test_length(); ++t) EXPECT_NEAR(p(l, 0, t), d.tensor(l, 0, d.train_end + t), 1e-9);
}

TEST(Detensor, SameCodePathAsSeasonalStage) {
  const PanelDataset d = generate_scenario(small_scenario(4));
  BaselineConfig cfg;
  cfg.detensor.cpd.rank = 3;
  cfg.detensor.forecaster.kind = ForecasterKind::kAr;
  cfg.detensor.forecaster.window = 3;
  cfg.reseed(9);
  const BaselineModel m = fit_baseline(d, cfg);

  const Tensor3 history = d.tensor.time_slice(0, d.train_end);
  const FiberScaling sc = FiberScaling::fit(history);
  const FittedStage direct = fit_stage1(sc.apply(history), cfg.detensor);
  ASSERT_TRUE(m.detensor.has_value());
  EXPECT_EQ(m.detensor->factors().a, direct.factors().a);
  EXPECT_EQ(m.detensor->factors().c, direct.factors().c);
  EXPECT_EQ(m.detensor->forecaster.ar_coefficients, direct.forecaster.ar_coefficients);

  const Tensor3 p = forecast_baseline(m, 10);
  EXPECT_EQ(p.features(), d.features.size());
  EXPECT_EQ(forecast_features(m), d.features);
  const Tensor3 want = sc.invert(project_seasonal(direct, 10));
  for (std::size_t l = 0; l < p.locations(); ++l)
    for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(p(l, 0, t), std::max(0.0, want(l, 0, t)));
}

TEST(Detensor, ZeroTensorForecastsZero) {
  StageConfig cfg;
  cfg.cpd.rank = 2;
  cfg.forecaster.kind = ForecasterKind::kAr;
  cfg.forecaster.window = 2;
  const FittedStage s = fit_detensor(Tensor3(2, 2, 20), cfg);
  EXPECT_EQ(frobenius_norm(project_seasonal(s, 4)), 0.0);
}

TEST(Detensor, Deterministic) {
  const PanelDataset d = generate_scenario(small_scenario(5));
  BaselineConfig cfg;
  cfg.detensor.forecaster.hidden = 4;
  cfg.detensor.forecaster.epochs = 3;
  cfg.detensor.forecaster.window = 8;
  cfg.reseed(1);
  EXPECT_EQ(forecast_baseline(fit_baseline(d, cfg), 12), forecast_baseline(fit_baseline(d, cfg), 12));
}

TEST(PerLocation, ShapeAndDeterminism) {
  const PanelDataset d = generate_scenario(small_scenario(6));
  BaselineConfig cfg;
  cfg.kind = BaselineKind::kPerLocationLstm;
  cfg.per_location.window = 6;
  cfg.per_location.hidden = 4;
  cfg.per_location.epochs = 2;
  cfg.reseed(3);
  const BaselineModel m = fit_baseline(d, cfg);
  ASSERT_EQ(m.per_location.size(), 3u);
  // distinct per-location seeds give distinct initial weights
  EXPECT_NE(m.per_location[0].lstm->w, m.per_location[1].lstm->w);
  const Tensor3 p = forecast_baseline(m, 9);
  EXPECT_EQ(p.locations(), 3u);
  EXPECT_EQ(p.features(), 1u);
  EXPECT_EQ(p.times(), 9u);
  EXPECT_EQ(forecast_features(m).front().role, FeatureRole::kCount);
  EXPECT_EQ(p, forecast_baseline(fit_baseline(d, cfg), 9));
}

TEST(PerLocation, ArOnConstantPanelIsConstant) {
  PanelDataset d = generate_scenario(small_scenario(7));
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t m = 0; m < d.features.size(); ++m)
      for (std::size_t t = 0; t < d.weeks.size(); ++t) d.tensor(l, m, t) = 5.0 + static_cast<double>(l);
  BaselineConfig cfg;
  cfg.kind = BaselineKind::kAr;
  cfg.per_location.window = 4;
  const Tensor3 p = forecast_baseline(fit_baseline(d, cfg), 8);
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t t = 0; t < 8; ++t) EXPECT_NEAR(p(l, 0, t), 5.0 + static_cast<double>(l), 1e-9);
}

TEST(Baseline, KindNamesRoundTrip) {
  for (auto k : {BaselineKind::kDetensor, BaselineKind::kPerLocationLstm, BaselineKind::kSeasonalNaive,
                 BaselineKind::kAr})
    EXPECT_EQ(baseline_kind_from_string(to_string(k)), k);
  EXPECT_THROW(baseline_kind_from_string("prophet"), ConfigError);
}

TEST(Baseline, ZeroHorizonRejected) {
  const PanelDataset d = generate_scenario(small_scenario(8));
  BaselineConfig cfg;
  cfg.kind = BaselineKind::kSeasonalNaive;
  EXPECT_THROW(forecast_baseline(fit_baseline(d, cfg), 0), ContractViolation);
}

}  // namespace
}  // namespace decom

#pragma once

#include "decom/panel.hpp"
#include "decom/pipeline.hpp"
#include "decom/temporal.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace decom {

enum class BaselineKind { kDetensor, kPerLocationLstm, kSeasonalNaive, kAr };

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kDetensor;
  StageConfig detensor;           // nonnegative CPD + forecaster on C
  ForecasterConfig per_location;  // used by per_location_lstm and ar
  std::size_t period = 52;        // seasonal_naive

  BaselineConfig();
  void reseed(std::uint64_t seed);
  void validate() const;
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::kDetensor;
  BaselineConfig config;
  std::vector<std::string> locations;
  std::vector<Feature> features;  // features the model consumed
  std::size_t target = 0;         // count feature index within `features`
  Week forecast_start{};

  // detensor
  std::optional<FittedStage> detensor;
  FiberScaling scaling;

  // per-location lstm / ar: one forecaster and its trailing scaled history
  std::vector<Forecaster> per_location;
  std::vector<Matrix> histories;

  // seasonal_naive: L x period trailing count values
  Matrix last_period;
};

// One nonnegative CPD plus forecaster on an already scaled tensor. This is
// exactly the seasonal stage of the coupled model applied to all history.
FittedStage fit_detensor(const Tensor3& x, const StageConfig& cfg);

// Fits the configured baseline on weeks [0, train_end) of the panel.
BaselineModel fit_baseline(const PanelDataset& dataset, const BaselineConfig& cfg);

// Forecast for the weeks after train_end, original units, L x F x horizon
// where F are the features listed by forecast_features.
Tensor3 forecast_baseline(const BaselineModel& model, std::size_t horizon);
std::vector<Feature> forecast_features(const BaselineModel& model);

// Step h (1-based) repeats the value observed at T - period + ((h-1) mod period).
std::vector<double> seasonal_naive(std::span<const double> series, std::size_t period, std::size_t horizon);

}  // namespace decom

#pragma once

#include "decom/cpd.hpp"
#include "decom/panel.hpp"
#include "decom/temporal.hpp"
#include "decom/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace decom {

struct StageConfig {
  CpdConfig cpd;
  ForecasterConfig forecaster;
};

struct DecomConfig {
  StageConfig seasonal;  // stage 1, nonnegative
  StageConfig residual;  // stage 2, unconstrained

  DecomConfig();
  // Derives every stage seed from one run seed.
  void reseed(std::uint64_t seed);
  void validate() const;
};

// A CP model of one stage plus the forecaster trained on its temporal factor.
struct FittedStage {
  CpdResult cpd;
  Forecaster forecaster;

  const FactorSet& factors() const { return cpd.factors; }
};

struct DecomModel {
  FittedStage seasonal;
  FittedStage residual;
  FeatureAlignment alignment;
  std::vector<std::string> locations;
  std::vector<Feature> stage1_features;
  std::vector<Feature> stage2_features;
  FiberScaling stage1_scaling;  // L x M1
  FiberScaling stage2_scaling;  // L x M2; matched features reuse stage-1 statistics
  std::size_t cut_index = 0;    // T1
  std::size_t train_end = 0;    // T
  Week forecast_start{};        // week T
  DecomConfig config;
  double residual_norm = 0.0;   // ||dX2||_F in scaled units
  double x2_norm = 0.0;         // ||X2||_F in scaled units

  void validate() const;
};

// Nonnegative CPD of the (scaled, nonnegative) pre-disruption tensor and a
// forecaster on its temporal factor.
FittedStage fit_stage1(const Tensor3& x1, const StageConfig& cfg);

// [[A1, B1, f1 rollout]] for `horizon` weeks past the end of C1.
Tensor3 project_seasonal(const FittedStage& stage1, std::size_t horizon);

// X2 - X~1 on matched features; unmatched features pass through unchanged.
Tensor3 compute_residual(const Tensor3& x2, const Tensor3& xtilde1, const FeatureAlignment& align);

// Unconstrained CPD of the residual tensor and a forecaster on its C2.
FittedStage fit_stage2(const Tensor3& dx2, const StageConfig& cfg);

DecomModel fit_decom(const PanelDataset& dataset, const DecomConfig& cfg);

// Scaled-unit terms of the summed prediction over the t0 weeks after T, on
// the matched stage-2 features (in stage-2 order).
Tensor3 seasonal_continuation(const DecomModel& model, std::size_t t0);
Tensor3 residual_forecast(const DecomModel& model, std::size_t t0);

// Seasonal continuation plus residual forecast, returned in original units
// with count features clipped at zero. Shape L x matched x t0.
Tensor3 predict(const DecomModel& model, std::size_t t0);

std::vector<Feature> predicted_features(const DecomModel& model);

}  // namespace decom

#include "decom/pipeline.hpp"

#include "decom/error.hpp"

#include <algorithm>

namespace decom {

namespace {

std::vector<std::size_t> matched_stage2_indices(const FeatureAlignment& align) {
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < align.to_stage1.size(); ++m) {
    if (align.to_stage1[m]) out.push_back(m);
  }
  return out;
}

Tensor3 reconstruct_with(const FactorSet& f, const Matrix& temporal) {
  return reconstruct(FactorSet{f.a, f.b, temporal});
}

FittedStage fit_stage(const Tensor3& x, StageConfig cfg, bool nonnegative) {
  cfg.cpd.nonnegative = nonnegative;
  FittedStage stage;
  stage.cpd = cpd_fit(x, cfg.cpd);
  stage.forecaster = train_forecaster(stage.cpd.factors.c, cfg.forecaster);
  return stage;
}

}  // namespace

DecomConfig::DecomConfig() {
  seasonal.cpd.rank = 5;
  seasonal.cpd.nonnegative = true;
  residual.cpd.rank = 3;
  residual.cpd.nonnegative = false;
}

void DecomConfig::reseed(std::uint64_t seed) {
  seasonal.cpd.seed = seed;
  seasonal.forecaster.seed = seed + 1;
  residual.cpd.seed = seed + 2;
  residual.forecaster.seed = seed + 3;
}

void DecomConfig::validate() const {
  seasonal.cpd.validate();
  seasonal.forecaster.validate();
  residual.cpd.validate();
  residual.forecaster.validate();
}

void DecomModel::validate() const {
  seasonal.factors().validate();
  residual.factors().validate();
  if (!seasonal.factors().nonnegative()) throw ModelError("seasonal factors must be nonnegative");
  if (seasonal.factors().c.rows() != static_cast<Eigen::Index>(cut_index)) {
    throw ModelError("seasonal temporal factor must have T1 rows");
  }
  if (residual.factors().c.rows() != static_cast<Eigen::Index>(train_end - cut_index)) {
    throw ModelError("residual temporal factor must have T - T1 rows");
  }
  alignment.validate(stage1_features.size());
  if (alignment.to_stage1.size() != stage2_features.size()) {
    throw ModelError("alignment does not cover the stage-2 features");
  }
}

FittedStage fit_stage1(const Tensor3& x1, const StageConfig& cfg) { return fit_stage(x1, cfg, true); }

FittedStage fit_stage2(const Tensor3& dx2, const StageConfig& cfg) { return fit_stage(dx2, cfg, false); }

Tensor3 project_seasonal(const FittedStage& stage1, std::size_t horizon) {
  if (horizon < 1) throw ContractViolation("project_seasonal: horizon must be at least 1");
  const Matrix rollout = forecast(stage1.forecaster, stage1.factors().c, horizon);
  return reconstruct_with(stage1.factors(), rollout);
}

Tensor3 compute_residual(const Tensor3& x2, const Tensor3& xtilde1, const FeatureAlignment& align) {
  if (x2.locations() != xtilde1.locations() || x2.times() != xtilde1.times()) {
    throw ContractViolation("compute_residual: location or time dimensions differ");
  }
  if (align.to_stage1.size() != x2.features()) {
    throw ContractViolation("compute_residual: alignment does not cover the stage-2 features");
  }
  align.validate(xtilde1.features());
  Tensor3 dx = x2;
  for (std::size_t m = 0; m < x2.features(); ++m) {
    const auto source = align.to_stage1[m];
    if (!source) continue;
    for (std::size_t l = 0; l < x2.locations(); ++l)
      for (std::size_t t = 0; t < x2.times(); ++t) dx(l, m, t) = x2(l, m, t) - xtilde1(l, *source, t);
  }
  return dx;
}

DecomModel fit_decom(const PanelDataset& dataset, const DecomConfig& cfg) {
  cfg.validate();
  dataset.validate();
  const PanelSplit split = split_at(dataset, dataset.cut_index, dataset.train_end);

  DecomModel model;
  model.config = cfg;
  model.locations = dataset.locations;
  model.stage1_features = split.stage1_features;
  model.stage2_features = split.stage2_features;
  model.alignment = split.alignment;
  model.cut_index = split.cut_index;
  model.train_end = split.end_index;
  model.forecast_start = dataset.weeks.front() + std::chrono::days{7 * static_cast<int>(split.end_index)};

  model.stage1_scaling = FiberScaling::fit(split.x1);
  const Tensor3 x1 = model.stage1_scaling.apply(split.x1);
  model.seasonal = fit_stage1(x1, cfg.seasonal);

  const std::size_t post_len = split.end_index - split.cut_index;
  const Tensor3 xtilde1 = project_seasonal(model.seasonal, post_len);

  // Matched features reuse the stage-1 statistics so the subtraction is in
  // common units; covid-only features are scaled by their own history.
  const FiberScaling own = FiberScaling::fit(split.x2);
  FiberScaling s2 = own;
  const std::size_t m1 = split.x1.features();
  for (std::size_t l = 0; l < s2.locations; ++l)
    for (std::size_t m = 0; m < s2.features; ++m) {
      if (const auto src = split.alignment.to_stage1[m]) {
        s2.offset[l * s2.features + m] = model.stage1_scaling.offset[l * m1 + *src];
        s2.span[l * s2.features + m] = model.stage1_scaling.span[l * m1 + *src];
      }
    }
  model.stage2_scaling = std::move(s2);
  const Tensor3 x2 = model.stage2_scaling.apply(split.x2);
  const Tensor3 dx2 = compute_residual(x2, xtilde1, split.alignment);
  model.x2_norm = frobenius_norm(x2);
  model.residual_norm = frobenius_norm(dx2);
  model.residual = fit_stage2(dx2, cfg.residual);
  model.validate();
  return model;
}

Tensor3 seasonal_continuation(const DecomModel& model, std::size_t t0) {
  if (t0 < 1) throw ContractViolation("predict: t0 must be at least 1");
  const std::size_t gap = model.train_end - model.cut_index;
  // One continuous rollout of f1 from T1: the first `gap` rows cover the
  // disrupted history, the remaining t0 rows the forecast horizon.
  const Matrix rollout = forecast(model.seasonal.forecaster, model.seasonal.factors().c, gap + t0);
  const Tensor3 full = reconstruct_with(model.seasonal.factors(), rollout.bottomRows(static_cast<Eigen::Index>(t0)));
  std::vector<std::size_t> sources;
  for (const auto& src : model.alignment.to_stage1) {
    if (src) sources.push_back(*src);
  }
  return full.select_features(sources);
}

Tensor3 residual_forecast(const DecomModel& model, std::size_t t0) {
  if (t0 < 1) throw ContractViolation("predict: t0 must be at least 1");
  const Matrix rollout = forecast(model.residual.forecaster, model.residual.factors().c, t0);
  const Tensor3 full = reconstruct_with(model.residual.factors(), rollout);
  return full.select_features(matched_stage2_indices(model.alignment));
}

std::vector<Feature> predicted_features(const DecomModel& model) {
  std::vector<Feature> out;
  for (std::size_t m : matched_stage2_indices(model.alignment)) out.push_back(model.stage2_features[m]);
  return out;
}

Tensor3 predict(const DecomModel& model, std::size_t t0) {
  const Tensor3 seasonal = seasonal_continuation(model, t0);
  const Tensor3 residual = residual_forecast(model, t0);
  const auto matched = matched_stage2_indices(model.alignment);
  const FiberScaling scaling = model.stage2_scaling.select_features(matched);
  Tensor3 out(seasonal.locations(), seasonal.features(), t0);
  for (std::size_t l = 0; l < out.locations(); ++l)
    for (std::size_t j = 0; j < out.features(); ++j) {
      const bool clip = model.stage2_features[matched[j]].role == FeatureRole::kCount;
      for (std::size_t t = 0; t < t0; ++t) {
        double v = scaling.invert_value(l, j, seasonal(l, j, t) + residual(l, j, t));
        if (clip) v = std::max(0.0, v);
        out(l, j, t) = v;
      }
    }
  return out;
}

}  // namespace decom

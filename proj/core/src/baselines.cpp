#include "decom/baselines.hpp"

#include "decom/error.hpp"

#include <algorithm>
#include <future>
#include <thread>

namespace decom {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kDetensor: return "detensor";
    case BaselineKind::kPerLocationLstm: return "lstm";
    case BaselineKind::kSeasonalNaive: return "seasonal_naive";
    default: return "ar";
  }
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "detensor") return BaselineKind::kDetensor;
  if (name == "lstm" || name == "per_location_lstm") return BaselineKind::kPerLocationLstm;
  if (name == "seasonal_naive") return BaselineKind::kSeasonalNaive;
  if (name == "ar") return BaselineKind::kAr;
  throw ConfigError("unknown baseline kind '" + name + "'");
}

BaselineConfig::BaselineConfig() {
  detensor.cpd.rank = 5;
  detensor.cpd.nonnegative = true;
}

void BaselineConfig::reseed(std::uint64_t seed) {
  detensor.cpd.seed = seed;
  detensor.forecaster.seed = seed + 1;
  per_location.seed = seed + 100;
}

void BaselineConfig::validate() const {
  detensor.cpd.validate();
  detensor.forecaster.validate();
  per_location.validate();
  if (period < 1) throw ConfigError("baseline period must be at least 1");
}

std::vector<double> seasonal_naive(std::span<const double> series, std::size_t period, std::size_t horizon) {
  if (period < 1) throw PreconditionError("seasonal_naive: period must be at least 1");
  if (series.size() < period) throw PreconditionError("seasonal_naive: series shorter than one period");
  const std::size_t base = series.size() - period;
  std::vector<double> out(horizon);
  for (std::size_t h = 0; h < horizon; ++h) out[h] = series[base + h % period];
  return out;
}

FittedStage fit_detensor(const Tensor3& x, const StageConfig& cfg) { return fit_stage1(x, cfg); }

namespace {

Matrix location_matrix(const Tensor3& x, std::size_t l) {
  Matrix out(static_cast<Eigen::Index>(x.times()), static_cast<Eigen::Index>(x.features()));
  for (std::size_t t = 0; t < x.times(); ++t)
    for (std::size_t m = 0; m < x.features(); ++m) out(t, m) = x(l, m, t);
  return out;
}

template <class Fn>
auto parallel_map(std::size_t n, Fn fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out;
  out.reserve(n);
  if (std::thread::hardware_concurrency() <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<R>> futures;
  for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, fn, i));
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace

BaselineModel fit_baseline(const PanelDataset& dataset, const BaselineConfig& cfg) {
  cfg.validate();
  dataset.validate();
  if (dataset.train_end < 2) throw DataError("baseline: training range too short");

  BaselineModel model;
  model.kind = cfg.kind;
  model.config = cfg;
  model.locations = dataset.locations;
  model.features = dataset.features;
  model.target = dataset.count_feature();
  model.forecast_start = dataset.weeks.front() + std::chrono::days{7 * static_cast<int>(dataset.train_end)};

  const Tensor3 history = dataset.tensor.time_slice(0, dataset.train_end);
  switch (cfg.kind) {
    case BaselineKind::kDetensor: {
      model.scaling = FiberScaling::fit(history);
      model.detensor = fit_detensor(model.scaling.apply(history), cfg.detensor);
      break;
    }
    case BaselineKind::kPerLocationLstm:
    case BaselineKind::kAr: {
      ForecasterConfig fc = cfg.per_location;
      fc.kind = cfg.kind == BaselineKind::kAr ? ForecasterKind::kAr : ForecasterKind::kLstm;
      model.scaling = FiberScaling::fit(history);
      const Tensor3 scaled = model.scaling.apply(history);
      model.per_location = parallel_map(history.locations(), [&](std::size_t l) {
        ForecasterConfig local = fc;
        local.seed = fc.seed + l;
        return train_forecaster(location_matrix(scaled, l), local);
      });
      for (std::size_t l = 0; l < history.locations(); ++l) {
        const Matrix series = location_matrix(scaled, l);
        model.histories.push_back(series.bottomRows(static_cast<Eigen::Index>(fc.window)));
      }
      break;
    }
    case BaselineKind::kSeasonalNaive: {
      if (history.times() < cfg.period) throw PreconditionError("seasonal_naive: history shorter than period");
      model.last_period.resize(static_cast<Eigen::Index>(history.locations()),
                               static_cast<Eigen::Index>(cfg.period));
      for (std::size_t l = 0; l < history.locations(); ++l)
        for (std::size_t p = 0; p < cfg.period; ++p) {
          model.last_period(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(p)) =
              history(l, model.target, history.times() - cfg.period + p);
        }
      break;
    }
  }
  return model;
}

std::vector<Feature> forecast_features(const BaselineModel& model) {
  if (model.kind == BaselineKind::kDetensor) return model.features;
  return {model.features.at(model.target)};
}

Tensor3 forecast_baseline(const BaselineModel& model, std::size_t horizon) {
  if (horizon < 1) throw ContractViolation("forecast_baseline: horizon must be at least 1");
  const std::size_t L = model.locations.size();
  switch (model.kind) {
    case BaselineKind::kDetensor: {
      const Tensor3 scaled = project_seasonal(*model.detensor, horizon);
      Tensor3 out = model.scaling.invert(scaled);
      for (std::size_t m = 0; m < out.features(); ++m) {
        if (model.features[m].role != FeatureRole::kCount) continue;
        for (std::size_t l = 0; l < L; ++l)
          for (std::size_t t = 0; t < horizon; ++t) out(l, m, t) = std::max(0.0, out(l, m, t));
      }
      return out;
    }
    case BaselineKind::kPerLocationLstm:
    case BaselineKind::kAr: {
      Tensor3 out(L, 1, horizon);
      for (std::size_t l = 0; l < L; ++l) {
        const Matrix path = forecast(model.per_location[l], model.histories[l], horizon);
        for (std::size_t t = 0; t < horizon; ++t) {
          const double v = model.scaling.invert_value(l, model.target, path(static_cast<Eigen::Index>(t),
                                                                               static_cast<Eigen::Index>(model.target)));
          out(l, 0, t) = std::max(0.0, v);
        }
      }
      return out;
    }
    case BaselineKind::kSeasonalNaive:
    default: {
      Tensor3 out(L, 1, horizon);
      for (std::size_t l = 0; l < L; ++l) {
        const RowVector row = model.last_period.row(static_cast<Eigen::Index>(l));
        const auto path = seasonal_naive(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                         static_cast<std::size_t>(row.size()), horizon);
        for (std::size_t t = 0; t < horizon; ++t) out(l, 0, t) = path[t];
      }
      return out;
    }
  }
}

}  // namespace decom

#include "decom/model_io.hpp"

#include "decom/error.hpp"

#include <fstream>

namespace decom {

namespace {

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

RowVector row_from(const Json& j) { return vector_from(j).transpose(); }

void check_header(const Json& j, const std::string& format) {
  if (!j.is_object() || j.value("format", std::string{}) != format) {
    throw ModelError("expected a '" + format + "' document");
  }
  const int version = j.value("schema_version", 0);
  if (version != kSchemaVersion) {
    throw ModelError("unsupported " + format + " schema_version " + std::to_string(version));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Primitives

void matrix_to_json(Json& j, const Matrix& m) {
  j = Json{{"rows", m.rows()}, {"cols", m.cols()},
           {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

void matrix_from_json(const Json& j, Matrix& m) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw ModelError("matrix document has inconsistent shape");
  }
  m = Eigen::Map<const Matrix>(data.data(), rows, cols);
}

// ---------------------------------------------------------------------------
// Configs

void to_json(Json& j, const CpdConfig& c) {
  j = Json{{"rank", c.rank}, {"nonnegative", c.nonnegative}, {"max_iters", c.max_iters},
           {"rel_tol", c.rel_tol}, {"seed", c.seed}};
}

void from_json(const Json& j, CpdConfig& c) {
  read_opt(j, "rank", c.rank);
  read_opt(j, "nonnegative", c.nonnegative);
  read_opt(j, "max_iters", c.max_iters);
  read_opt(j, "rel_tol", c.rel_tol);
  read_opt(j, "seed", c.seed);
}

void to_json(Json& j, const ForecasterConfig& c) {
  j = Json{{"kind", to_string(c.kind)},       {"window", c.window},
           {"hidden", c.hidden},              {"epochs", c.epochs},
           {"learning_rate", c.learning_rate}, {"clip_norm", c.clip_norm},
           {"init_scale", c.init_scale},      {"batch_size", c.batch_size},
           {"ar_ridge", c.ar_ridge},          {"seed", c.seed}};
}

void from_json(const Json& j, ForecasterConfig& c) {
  if (j.contains("kind")) c.kind = forecaster_kind_from_string(j.at("kind").get<std::string>());
  read_opt(j, "window", c.window);
  read_opt(j, "hidden", c.hidden);
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "clip_norm", c.clip_norm);
  read_opt(j, "init_scale", c.init_scale);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "ar_ridge", c.ar_ridge);
  read_opt(j, "seed", c.seed);
}

void to_json(Json& j, const StageConfig& c) { j = Json{{"cpd", c.cpd}, {"forecaster", c.forecaster}}; }

void from_json(const Json& j, StageConfig& c) {
  read_opt(j, "cpd", c.cpd);
  read_opt(j, "forecaster", c.forecaster);
}

void to_json(Json& j, const DecomConfig& c) { j = Json{{"seasonal", c.seasonal}, {"residual", c.residual}}; }

void from_json(const Json& j, DecomConfig& c) {
  read_opt(j, "seasonal", c.seasonal);
  read_opt(j, "residual", c.residual);
}

void to_json(Json& j, const BaselineConfig& c) {
  j = Json{{"kind", to_string(c.kind)}, {"detensor", c.detensor}, {"per_location", c.per_location},
           {"period", c.period}};
}

void from_json(const Json& j, BaselineConfig& c) {
  if (j.contains("kind")) c.kind = baseline_kind_from_string(j.at("kind").get<std::string>());
  read_opt(j, "detensor", c.detensor);
  read_opt(j, "per_location", c.per_location);
  read_opt(j, "period", c.period);
}

// ---------------------------------------------------------------------------
// Forecasters and factors

void to_json(Json& j, const Standardizer& s) {
  j = Json{{"shift", vector_json(s.shift.transpose())}, {"scale", vector_json(s.scale.transpose())}};
}

void from_json(const Json& j, Standardizer& s) {
  s.shift = row_from(j.at("shift"));
  s.scale = row_from(j.at("scale"));
  if (s.shift.size() != s.scale.size() || (s.scale.array() <= 0.0).any()) {
    throw ModelError("standardizer must have matching, positive scales");
  }
}

void to_json(Json& j, const Forecaster& f) {
  j = Json{{"kind", to_string(f.kind)}, {"window", f.window}, {"width", f.width},
           {"scaling", f.scaling},      {"loss_trace", f.loss_trace}};
  if (f.kind == ForecasterKind::kLstm && f.lstm) {
    const auto& p = *f.lstm;
    j["lstm"] = Json{{"input_size", p.input_size}, {"hidden_size", p.hidden_size}, {"w", p.w},
                     {"b", vector_json(p.b)},      {"w_out", p.w_out},             {"b_out", vector_json(p.b_out)}};
  } else {
    j["ar_coefficients"] = f.ar_coefficients;
  }
}

void from_json(const Json& j, Forecaster& f) {
  f.kind = forecaster_kind_from_string(j.at("kind").get<std::string>());
  j.at("window").get_to(f.window);
  j.at("width").get_to(f.width);
  j.at("scaling").get_to(f.scaling);
  read_opt(j, "loss_trace", f.loss_trace);
  if (f.scaling.shift.size() != static_cast<Eigen::Index>(f.width)) {
    throw ModelError("forecaster scaling width does not match");
  }
  if (f.kind == ForecasterKind::kLstm) {
    const auto& jl = j.at("lstm");
    LstmParams p;
    jl.at("input_size").get_to(p.input_size);
    jl.at("hidden_size").get_to(p.hidden_size);
    jl.at("w").get_to(p.w);
    p.b = vector_from(jl.at("b"));
    jl.at("w_out").get_to(p.w_out);
    p.b_out = vector_from(jl.at("b_out"));
    p.validate();
    if (p.input_size != f.width) throw ModelError("lstm input size does not match forecaster width");
    f.lstm = std::move(p);
  } else {
    j.at("ar_coefficients").get_to(f.ar_coefficients);
    const auto k = static_cast<Eigen::Index>(f.width);
    if (f.ar_coefficients.rows() != static_cast<Eigen::Index>(f.window) * k + 1 || f.ar_coefficients.cols() != k) {
      throw ModelError("ar coefficient matrix has the wrong shape");
    }
  }
}

void to_json(Json& j, const FactorSet& f) { j = Json{{"rank", f.rank()}, {"a", f.a}, {"b", f.b}, {"c", f.c}}; }

void from_json(const Json& j, FactorSet& f) {
  j.at("a").get_to(f.a);
  j.at("b").get_to(f.b);
  j.at("c").get_to(f.c);
  f.validate();
}

void to_json(Json& j, const CpdResult& r) {
  j = Json{{"factors", r.factors},       {"fit", r.fit},
           {"iters_run", r.iters_run},   {"converged", r.converged},
           {"objective_trace", r.objective_trace}, {"ridge_events", r.ridge_events}};
}

void from_json(const Json& j, CpdResult& r) {
  j.at("factors").get_to(r.factors);
  j.at("fit").get_to(r.fit);
  read_opt(j, "iters_run", r.iters_run);
  read_opt(j, "converged", r.converged);
  read_opt(j, "objective_trace", r.objective_trace);
  read_opt(j, "ridge_events", r.ridge_events);
}

void to_json(Json& j, const FittedStage& s) { j = Json{{"cpd", s.cpd}, {"forecaster", s.forecaster}}; }

void from_json(const Json& j, FittedStage& s) {
  j.at("cpd").get_to(s.cpd);
  j.at("forecaster").get_to(s.forecaster);
  if (s.forecaster.width != s.cpd.factors.rank()) throw ModelError("stage forecaster width must equal rank");
}

void to_json(Json& j, const FiberScaling& s) {
  j = Json{{"locations", s.locations}, {"features", s.features}, {"offset", s.offset}, {"span", s.span}};
}

void from_json(const Json& j, FiberScaling& s) {
  j.at("locations").get_to(s.locations);
  j.at("features").get_to(s.features);
  j.at("offset").get_to(s.offset);
  j.at("span").get_to(s.span);
  if (s.offset.size() != s.locations * s.features || s.span.size() != s.offset.size()) {
    throw ModelError("scaling document has inconsistent sizes");
  }
}

void to_json(Json& j, const FeatureAlignment& a) {
  Json map = Json::array();
  for (std::size_t m = 0; m < a.stage2_names.size(); ++m) {
    map.push_back(Json{{"feature", a.stage2_names[m]},
                       {"stage1_index", a.to_stage1[m] ? Json(*a.to_stage1[m]) : Json(nullptr)}});
  }
  j = map;
}

void from_json(const Json& j, FeatureAlignment& a) {
  a = {};
  for (const auto& e : j) {
    a.stage2_names.push_back(e.at("feature").get<std::string>());
    const auto& idx = e.at("stage1_index");
    a.to_stage1.push_back(idx.is_null() ? std::nullopt : std::optional<std::size_t>(idx.get<std::size_t>()));
  }
}

void to_json(Json& j, const Feature& f) { j = Json{{"name", f.name}, {"role", to_string(f.role)}}; }

void from_json(const Json& j, Feature& f) {
  j.at("name").get_to(f.name);
  f.role = feature_role_from_string(j.value("role", std::string("other")));
}

void to_json(Json& j, const ScenarioTruth& t) {
  j = Json{{"location_peaks", t.location_peaks}, {"country_peak", t.country_peak}};
}

void from_json(const Json& j, ScenarioTruth& t) {
  j.at("location_peaks").get_to(t.location_peaks);
  j.at("country_peak").get_to(t.country_peak);
}

void to_json(Json& j, const ScenarioConfig& c) {
  j = Json{{"schema_version", c.schema_version},
           {"locations", c.locations},
           {"weeks", c.weeks},
           {"test_weeks", c.test_weeks},
           {"period", c.period},
           {"start_date", c.start_date},
           {"peak_week", c.peak_week},
           {"phase_lag", c.phase_lag},
           {"amplitude", c.amplitude},
           {"amplitude_spread", c.amplitude_spread},
           {"bump_width", c.bump_width},
           {"baseline", c.baseline},
           {"npi_start", c.npi_start},
           {"npi_end", c.npi_end},
           {"suppression", c.suppression},
           {"resurgence_shift", c.resurgence_shift},
           {"resurgence_gain", c.resurgence_gain},
           {"noise", c.noise},
           {"climate_features", c.climate_features},
           {"covid_amplitude", c.covid_amplitude},
           {"cut_index", c.cut_index ? Json(*c.cut_index) : Json(nullptr)},
           {"seed", c.seed}};
}

void from_json(const Json& j, ScenarioConfig& c) {
  static const std::vector<std::string> known = {
      "schema_version", "locations",   "weeks",       "test_weeks",       "period",
      "start_date",     "peak_week",   "phase_lag",   "amplitude",        "amplitude_spread",
      "bump_width",     "baseline",    "npi_start",   "npi_end",          "suppression",
      "resurgence_shift", "resurgence_gain", "noise", "climate_features", "covid_amplitude",
      "cut_index",      "seed"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("scenario." + key + ": unknown field");
    }
  }
  auto field = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(out);
    } catch (const Json::exception&) {
      throw ConfigError(std::string("scenario.") + key + ": wrong type");
    }
  };
  field("schema_version", c.schema_version);
  field("locations", c.locations);
  field("weeks", c.weeks);
  field("test_weeks", c.test_weeks);
  field("period", c.period);
  field("start_date", c.start_date);
  field("peak_week", c.peak_week);
  field("phase_lag", c.phase_lag);
  field("amplitude", c.amplitude);
  field("amplitude_spread", c.amplitude_spread);
  field("bump_width", c.bump_width);
  field("baseline", c.baseline);
  field("npi_start", c.npi_start);
  field("npi_end", c.npi_end);
  field("suppression", c.suppression);
  field("resurgence_shift", c.resurgence_shift);
  field("resurgence_gain", c.resurgence_gain);
  field("noise", c.noise);
  field("climate_features", c.climate_features);
  field("covid_amplitude", c.covid_amplitude);
  field("seed", c.seed);
  if (j.contains("cut_index")) {
    c.cut_index = j.at("cut_index").is_null() ? std::nullopt
                                               : std::optional<std::size_t>(j.at("cut_index").get<std::size_t>());
  }
}

// ---------------------------------------------------------------------------
// Models

void to_json(Json& j, const DecomModel& m) {
  j = Json{{"config", m.config},
           {"locations", m.locations},
           {"stage1_features", m.stage1_features},
           {"stage2_features", m.stage2_features},
           {"alignment", m.alignment},
           {"stage1_scaling", m.stage1_scaling},
           {"stage2_scaling", m.stage2_scaling},
           {"cut_index", m.cut_index},
           {"train_end", m.train_end},
           {"forecast_start", format_iso_date(m.forecast_start)},
           {"seasonal", m.seasonal},
           {"residual", m.residual},
           {"diagnostics", {{"residual_norm", m.residual_norm}, {"x2_norm", m.x2_norm}}}};
}

void from_json(const Json& j, DecomModel& m) {
  j.at("config").get_to(m.config);
  j.at("locations").get_to(m.locations);
  j.at("stage1_features").get_to(m.stage1_features);
  j.at("stage2_features").get_to(m.stage2_features);
  j.at("alignment").get_to(m.alignment);
  j.at("stage1_scaling").get_to(m.stage1_scaling);
  j.at("stage2_scaling").get_to(m.stage2_scaling);
  j.at("cut_index").get_to(m.cut_index);
  j.at("train_end").get_to(m.train_end);
  m.forecast_start = parse_iso_date(j.at("forecast_start").get<std::string>());
  j.at("seasonal").get_to(m.seasonal);
  j.at("residual").get_to(m.residual);
  if (j.contains("diagnostics")) {
    m.residual_norm = j["diagnostics"].value("residual_norm", 0.0);
    m.x2_norm = j["diagnostics"].value("x2_norm", 0.0);
  }
  m.validate();
}

void to_json(Json& j, const BaselineModel& m) {
  j = Json{{"kind", to_string(m.kind)},
           {"config", m.config},
           {"locations", m.locations},
           {"features", m.features},
           {"target", m.target},
           {"forecast_start", format_iso_date(m.forecast_start)}};
  switch (m.kind) {
    case BaselineKind::kDetensor:
      j["scaling"] = m.scaling;
      j["stage"] = *m.detensor;
      break;
    case BaselineKind::kPerLocationLstm:
    case BaselineKind::kAr:
      j["scaling"] = m.scaling;
      j["forecasters"] = m.per_location;
      j["histories"] = m.histories;
      break;
    case BaselineKind::kSeasonalNaive:
      j["last_period"] = m.last_period;
      break;
  }
}

void from_json(const Json& j, BaselineModel& m) {
  m = {};
  m.kind = baseline_kind_from_string(j.at("kind").get<std::string>());
  j.at("config").get_to(m.config);
  j.at("locations").get_to(m.locations);
  j.at("features").get_to(m.features);
  j.at("target").get_to(m.target);
  m.forecast_start = parse_iso_date(j.at("forecast_start").get<std::string>());
  if (m.target >= m.features.size()) throw ModelError("baseline target feature out of range");
  switch (m.kind) {
    case BaselineKind::kDetensor:
      j.at("scaling").get_to(m.scaling);
      m.detensor = j.at("stage").get<FittedStage>();
      break;
    case BaselineKind::kPerLocationLstm:
    case BaselineKind::kAr:
      j.at("scaling").get_to(m.scaling);
      j.at("forecasters").get_to(m.per_location);
      j.at("histories").get_to(m.histories);
      if (m.per_location.size() != m.locations.size() || m.histories.size() != m.locations.size()) {
        throw ModelError("per-location baseline must have one forecaster per location");
      }
      break;
    case BaselineKind::kSeasonalNaive:
      j.at("last_period").get_to(m.last_period);
      break;
  }
}

void to_json(Json& j, const EvalReport& r) {
  Json horizons = Json::array();
  for (const auto& h : r.horizons) {
    horizons.push_back(Json{{"horizon", h.horizon},
                            {"rmse", h.rmse},
                            {"mae", h.mae},
                            {"rmse_mean", h.rmse_summary.mean},
                            {"rmse_sd", h.rmse_summary.sd},
                            {"mae_mean", h.mae_summary.mean},
                            {"mae_sd", h.mae_summary.sd},
                            {"country_rmse", h.country_rmse},
                            {"country_mae", h.country_mae}});
  }
  j = Json{{"model", r.model},
           {"locations", r.locations},
           {"horizons", horizons},
           {"country_peak", {{"actual", r.actual_peak}, {"predicted", r.predicted_peak}, {"diff", r.peak_diff}}},
           {"location_peak_diff", r.location_peak_diff},
           {"sd_convention", r.sd_convention}};
}

// ---------------------------------------------------------------------------
// Documents

Json forecaster_document(const Forecaster& f) {
  Json j = f;
  j["format"] = "decom-forecaster";
  j["schema_version"] = kSchemaVersion;
  return j;
}

Forecaster forecaster_from_document(const Json& j) {
  check_header(j, "decom-forecaster");
  return j.get<Forecaster>();
}

std::string model_kind(const AnyModel& model) {
  if (const auto* b = std::get_if<BaselineModel>(&model)) return to_string(b->kind);
  return "decom";
}

Json model_document(const AnyModel& model) {
  Json j = std::visit([](const auto& m) { return Json(m); }, model);
  j["format"] = "decom-model";
  j["schema_version"] = kSchemaVersion;
  j["model_kind"] = model_kind(model);
  return j;
}

AnyModel model_from_document(const Json& j) {
  check_header(j, "decom-model");
  try {
    if (j.at("model_kind").get<std::string>() == "decom") return j.get<DecomModel>();
    return j.get<BaselineModel>();
  } catch (const Json::exception& e) {
    throw ModelError(std::string("malformed model document: ") + e.what());
  }
}

Json panel_metadata(const PanelDataset& d, const ScenarioConfig* scenario) {
  Json j{{"format", "decom-panel-meta"},
         {"schema_version", kSchemaVersion},
         {"locations", d.locations},
         {"features", d.features},
         {"first_week", format_iso_date(d.weeks.front())},
         {"weeks", d.weeks.size()},
         {"cut_week", format_iso_date(d.weeks.at(d.cut_index))},
         {"train_end_week", d.train_end < d.weeks.size() ? format_iso_date(d.weeks[d.train_end])
                                                           : format_iso_date(d.weeks.back() + std::chrono::days{7})},
         {"cut_index", d.cut_index},
         {"train_end", d.train_end}};
  if (d.truth) j["truth"] = *d.truth;
  if (scenario) j["scenario"] = *scenario;
  return j;
}

PanelSchema schema_from_metadata(const Json& j) {
  check_header(j, "decom-panel-meta");
  PanelSchema s;
  j.at("locations").get_to(s.locations);
  j.at("features").get_to(s.features);
  s.cut_week = parse_iso_date(j.at("cut_week").get<std::string>());
  s.train_end_week = parse_iso_date(j.at("train_end_week").get<std::string>());
  return s;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace decom

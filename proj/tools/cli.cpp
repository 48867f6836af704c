#include "cli.hpp"

#include "decom/error.hpp"
#include "decom/eval.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

namespace decom::cli {

namespace fs = std::filesystem;
using std::chrono::days;

namespace {

const std::set<std::string> kTopLevelKeys{"schema_version", "scenario", "model",         "decom",
                                          "baseline",       "cut_date", "train_end_date", "count_feature",
                                          "horizon",        "horizons", "seed"};

Json parse_set_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return text;
  }
}

void apply_set(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  std::string pointer = "/" + assignment.substr(0, eq);
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  doc[Json::json_pointer(pointer)] = parse_set_value(assignment.substr(eq + 1));
}

// Every object key in `doc` must also appear in `known`, the serialized defaults.
void reject_unknown(const Json& doc, const Json& known, const std::string& path) {
  if (!doc.is_object() || !known.is_object()) return;
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError(path + "." + key + ": unknown field");
    reject_unknown(value, known.at(key), path + "." + key);
  }
}

// Snaps any date to the Monday of its week.
Week monday_of(Week day) { return day - (std::chrono::weekday{day} - std::chrono::Monday); }

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

void apply_forecaster_overrides(ForecasterConfig& f, const RunOptions& o) {
  if (o.window) f.window = *o.window;
  if (o.hidden) f.hidden = *o.hidden;
  if (o.epochs) f.epochs = *o.epochs;
  if (o.learning_rate) f.learning_rate = *o.learning_rate;
}

std::string model_name(const AnyModel& m) { return model_kind(m); }

std::vector<Feature> output_features(const AnyModel& m) {
  if (const auto* d = std::get_if<DecomModel>(&m)) return predicted_features(*d);
  return forecast_features(std::get<BaselineModel>(m));
}

const std::vector<std::string>& model_locations(const AnyModel& m) {
  if (const auto* d = std::get_if<DecomModel>(&m)) return d->locations;
  return std::get<BaselineModel>(m).locations;
}

Week model_start(const AnyModel& m) {
  if (const auto* d = std::get_if<DecomModel>(&m)) return d->forecast_start;
  return std::get<BaselineModel>(m).forecast_start;
}

void check_compatible(const AnyModel& model, const PanelDataset& data) {
  if (model_locations(model) != data.locations) {
    throw ModelError("model and dataset disagree on locations");
  }
  for (const auto& f : output_features(model)) {
    if (!data.feature_index(f.name)) throw ModelError("dataset lacks model feature '" + f.name + "'");
  }
  const Week start = model_start(model);
  if (start < data.weeks.front() || start > data.weeks.back() + days{7}) {
    throw ModelError("model forecast start " + format_iso_date(start) + " lies outside the dataset");
  }
}

// Forecast values indexed [location][feature][week].
struct ForecastTable {
  std::string model;
  Week start{};
  std::vector<std::string> locations;
  std::vector<Feature> features;
  Tensor3 values;
};

ForecastTable read_forecast(const std::string& path, const PanelDataset& data) {
  ForecastTable t;
  if (fs::path(path).extension() == ".json") {
    const Json j = read_json_file(path);
    if (j.value("format", std::string{}) != "decom-forecast") {
      throw DataError("'" + path + "' is not a decom-forecast document");
    }
    t.model = j.at("model").get<std::string>();
    t.start = parse_iso_date(j.at("forecast_start").get<std::string>());
    j.at("locations").get_to(t.locations);
    j.at("features").get_to(t.features);
    const auto horizon = j.at("horizon").get<std::size_t>();
    const auto flat = j.at("values").get<std::vector<double>>();
    if (flat.size() != t.locations.size() * t.features.size() * horizon) {
      throw DataError("'" + path + "': values do not match locations x features x horizon");
    }
    if (horizon == 0) throw DataError("'" + path + "' holds an empty forecast");
    t.values = Tensor3(Dims{t.locations.size(), t.features.size(), horizon}, flat);
    return t;
  }
  PanelSchema schema;
  schema.locations = data.locations;
  schema.missing_is_error = true;
  schema.count_feature = data.features[data.count_feature()].name;
  const PanelDataset f = load_csv(path, schema);
  t.model = fs::path(path).stem().string();
  t.start = f.weeks.front();
  t.locations = f.locations;
  t.features = f.features;
  t.values = f.tensor;
  return t;
}

Json forecast_document(const std::string& model, Week start, const std::vector<std::string>& locations,
                       const std::vector<Feature>& features, const std::optional<Tensor3>& values) {
  const std::size_t horizon = values ? values->times() : 0;
  std::vector<std::string> weeks;
  for (std::size_t t = 0; t < horizon; ++t) weeks.push_back(format_iso_date(start + days{7 * static_cast<int>(t)}));
  std::vector<double> flat;
  if (values) flat.assign(values->values().begin(), values->values().end());
  return Json{{"format", "decom-forecast"},
              {"schema_version", kSchemaVersion},
              {"model", model},
              {"forecast_start", format_iso_date(start)},
              {"horizon", horizon},
              {"locations", locations},
              {"features", features},
              {"weeks", weeks},
              {"layout", "location-major, then feature, then week"},
              {"values", flat}};
}

}  // namespace

RunConfig resolve(const RunOptions& o) {
  Json doc = Json::object();
  if (!o.config_path.empty()) {
    doc = read_json_file(o.config_path);
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  for (const auto& s : o.sets) apply_set(doc, s);

  RunConfig c;
  try {
    for (const auto& [key, _] : doc.items()) {
      if (!kTopLevelKeys.contains(key)) throw ConfigError("config." + key + ": unknown field");
    }
    if (doc.value("schema_version", kConfigSchemaVersion) != kConfigSchemaVersion) {
      throw ConfigError("config.schema_version: unsupported version");
    }
    if (doc.contains("scenario")) doc.at("scenario").get_to(c.scenario);
    c.model_kind = doc.value("model", c.model_kind);
    if (doc.contains("decom")) {
      reject_unknown(doc.at("decom"), Json(c.decom), "config.decom");
      doc.at("decom").get_to(c.decom);
    }
    if (doc.contains("baseline")) {
      reject_unknown(doc.at("baseline"), Json(c.baseline), "config.baseline");
      doc.at("baseline").get_to(c.baseline);
    }
    if (doc.contains("cut_date")) c.cut_date = parse_iso_date(doc.at("cut_date").get<std::string>());
    if (doc.contains("train_end_date")) {
      c.train_end_date = parse_iso_date(doc.at("train_end_date").get<std::string>());
    }
    c.count_feature = doc.value("count_feature", c.count_feature);
    c.horizon = doc.value("horizon", c.horizon);
    if (doc.contains("horizons")) doc.at("horizons").get_to(c.horizons);
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (o.model_kind) c.model_kind = *o.model_kind;
  if (o.cut_date) c.cut_date = parse_iso_date(*o.cut_date);
  if (o.train_end_date) c.train_end_date = parse_iso_date(*o.train_end_date);
  if (o.count_feature) c.count_feature = *o.count_feature;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.horizons) c.horizons = *o.horizons;
  if (o.seed) c.seed = o.seed;
  if (o.k1) c.decom.seasonal.cpd.rank = c.baseline.detensor.cpd.rank = *o.k1;
  if (o.k2) c.decom.residual.cpd.rank = *o.k2;
  apply_forecaster_overrides(c.decom.seasonal.forecaster, o);
  apply_forecaster_overrides(c.baseline.detensor.forecaster, o);
  apply_forecaster_overrides(c.baseline.per_location, o);

  if (c.model_kind != "decom") c.baseline.kind = baseline_kind_from_string(c.model_kind);
  if (c.seed) {
    c.scenario.seed = *c.seed;
    c.decom.reseed(*c.seed);
    c.baseline.reseed(*c.seed);
  }
  if (c.horizons.empty()) throw ConfigError("horizons: at least one horizon is required");
  if (std::find(c.horizons.begin(), c.horizons.end(), std::size_t{0}) != c.horizons.end()) {
    throw ConfigError("horizons: every horizon must be at least 1");
  }

  c.out_dir = o.out_dir;
  c.data = o.data;
  c.meta = o.meta;
  c.model_file = o.model_file;
  c.forecasts = o.forecasts;
  c.names = o.names;
  return c;
}

PanelDataset load_panel(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("--data is required");
  PanelSchema schema;
  schema.count_feature = cfg.count_feature;
  if (!cfg.meta.empty()) schema = schema_from_metadata(read_json_file(cfg.meta));
  if (cfg.cut_date) schema.cut_week = monday_of(*cfg.cut_date);
  if (cfg.train_end_date) schema.train_end_week = monday_of(*cfg.train_end_date);
  PanelDataset d = load_csv(cfg.data, schema);
  if (cfg.cut_date && d.cut_index == 0) throw DataError("cut date must fall after the first week");
  return d;
}

void cmd_generate(const RunConfig& cfg) {
  cfg.scenario.validate();
  const PanelDataset d = generate_scenario(cfg.scenario);
  ensure_dir(cfg.out_dir);
  write_csv(d, path_in(cfg.out_dir, "panel.csv"));
  write_json_file(panel_metadata(d, &cfg.scenario), path_in(cfg.out_dir, "panel_meta.json"));
}

void cmd_fit(const RunConfig& cfg) {
  const PanelDataset d = load_panel(cfg);
  AnyModel model = [&]() -> AnyModel {
    if (cfg.model_kind == "decom") {
      if (d.cut_index == 0) throw DataError("decom needs a cut date inside the training range");
      return fit_decom(d, cfg.decom);
    }
    return fit_baseline(d, cfg.baseline);
  }();
  ensure_dir(cfg.out_dir);
  write_json_file(model_document(model), path_in(cfg.out_dir, "model.json"));
}

void cmd_forecast(const RunConfig& cfg) {
  if (cfg.model_file.empty()) throw ConfigError("--model-file is required");
  const AnyModel model = model_from_document(read_json_file(cfg.model_file));
  if (!cfg.data.empty()) check_compatible(model, load_panel(cfg));

  const auto features = output_features(model);
  const auto& locations = model_locations(model);
  // Horizon 0 writes headers and an empty value list.
  std::optional<Tensor3> values;
  if (cfg.horizon > 0) {
    if (const auto* dm = std::get_if<DecomModel>(&model)) {
      values = predict(*dm, cfg.horizon);
    } else {
      values = forecast_baseline(std::get<BaselineModel>(model), cfg.horizon);
    }
  }
  const Week start = model_start(model);

  ensure_dir(cfg.out_dir);
  const std::string csv_path = path_in(cfg.out_dir, "forecast.csv");
  auto out = open_out(csv_path);
  out << "location,feature,week,value\n";
  if (values) {
    for (std::size_t l = 0; l < values->locations(); ++l)
      for (std::size_t m = 0; m < values->features(); ++m)
        for (std::size_t t = 0; t < values->times(); ++t) {
          out << locations[l] << ',' << features[m].name << ','
              << format_iso_date(start + days{7 * static_cast<int>(t)}) << ','
              << format_value((*values)(l, m, t)) << '\n';
        }
  }
  if (!out) throw IoError("failed writing '" + csv_path + "'");
  write_json_file(forecast_document(model_name(model), start, locations, features, values),
                  path_in(cfg.out_dir, "forecast.json"));
}

void cmd_evaluate(const RunConfig& cfg) {
  if (cfg.forecasts.empty()) throw ConfigError("at least one --forecast is required");
  if (!cfg.names.empty() && cfg.names.size() != cfg.forecasts.size()) {
    throw ConfigError("--name must be given once per --forecast");
  }
  const PanelDataset data = load_panel(cfg);
  const std::size_t count = data.count_feature();
  const std::string& count_name = data.features[count].name;
  const std::size_t longest = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());

  std::vector<EvalReport> reports;
  std::vector<Week> starts;
  for (std::size_t i = 0; i < cfg.forecasts.size(); ++i) {
    const ForecastTable f = read_forecast(cfg.forecasts[i], data);
    const std::string name = cfg.names.empty() ? f.model : cfg.names[i];
    if (f.locations != data.locations) throw DataError(name + ": forecast locations differ from the dataset");
    const auto fi = std::find_if(f.features.begin(), f.features.end(),
                                 [&](const Feature& x) { return x.name == count_name; });
    if (fi == f.features.end()) throw DataError(name + ": forecast lacks count feature '" + count_name + "'");
    const std::size_t start = data.week_index(f.start);
    if (longest > f.values.times()) {
      throw PreconditionError(name + ": horizon " + std::to_string(longest) + " exceeds the forecast length " +
                              std::to_string(f.values.times()));
    }
    if (start + longest > data.weeks.size()) {
      throw PreconditionError(name + ": horizon " + std::to_string(longest) + " exceeds the " +
                              std::to_string(data.weeks.size() - start) + " weeks of held-out truth");
    }
    const auto m = static_cast<std::size_t>(fi - f.features.begin());
    Matrix actual(static_cast<Eigen::Index>(data.locations.size()), static_cast<Eigen::Index>(longest));
    Matrix predicted(actual.rows(), actual.cols());
    for (std::size_t l = 0; l < data.locations.size(); ++l)
      for (std::size_t t = 0; t < longest; ++t) {
        actual(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(t)) = data.tensor(l, count, start + t);
        predicted(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(t)) = f.values(l, m, t);
      }
    reports.push_back(evaluate(actual, predicted, cfg.horizons, name, data.locations));
    starts.push_back(f.start);
  }

  ensure_dir(cfg.out_dir);
  Json forecasts = Json::array();
  for (const auto& p : cfg.forecasts) forecasts.push_back(fs::path(p).filename().string());
  Json doc{{"format", "decom-report"},
           {"schema_version", kSchemaVersion},
           {"config", {{"horizons", cfg.horizons}, {"count_feature", count_name}, {"forecasts", forecasts}}},
           {"reports", reports}};
  write_json_file(doc, path_in(cfg.out_dir, "report.json"));

  const std::string table_path = path_in(cfg.out_dir, "report_table.csv");
  auto table = open_out(table_path);
  table << "model,horizon,rmse_mean,rmse_sd,mae_mean,mae_sd,country_rmse,country_mae\n";
  for (const auto& r : reports)
    for (const auto& h : r.horizons) {
      table << r.model << ',' << h.horizon << ',' << format_value(h.rmse_summary.mean) << ','
            << format_value(h.rmse_summary.sd) << ',' << format_value(h.mae_summary.mean) << ','
            << format_value(h.mae_summary.sd) << ',' << format_value(h.country_rmse) << ','
            << format_value(h.country_mae) << '\n';
    }
  if (!table) throw IoError("failed writing '" + table_path + "'");

  const std::string peaks_path = path_in(cfg.out_dir, "peaks.csv");
  auto peaks = open_out(peaks_path);
  peaks << "model,actual_peak_week,predicted_peak_week,peak_diff\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    peaks << r.model << ',' << format_iso_date(starts[i] + days{7 * static_cast<int>(r.actual_peak)}) << ','
          << format_iso_date(starts[i] + days{7 * static_cast<int>(r.predicted_peak)}) << ',' << r.peak_diff << '\n';
  }
  if (!peaks) throw IoError("failed writing '" + peaks_path + "'");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunOptions o;
  CLI::App app{"Coupled tensor-factorization forecaster for disrupted seasonal panels", "decom"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "Override a config field, e.g. scenario.suppression=0.5");
    sub->add_option("--seed", o.seed, "Run seed");
    sub->add_option("--out-dir", o.out_dir, "Directory for outputs");
  };
  auto data_opts = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "Panel CSV (location,feature,week,value)");
    sub->add_option("--meta", o.meta, "Panel metadata JSON written by generate");
    sub->add_option("--cut-date", o.cut_date, "Disruption cut, ISO date (snapped to its Monday)");
    sub->add_option("--train-end", o.train_end_date, "First held-out week, ISO date");
    sub->add_option("--count-feature", o.count_feature, "Count feature name when no metadata is given");
  };

  auto* gen = app.add_subcommand("generate", "Write a synthetic scenario panel");
  common(gen);

  auto* fit = app.add_subcommand("fit", "Fit a model and write model.json");
  common(fit);
  data_opts(fit);
  fit->add_option("--model", o.model_kind, "decom | detensor | lstm | seasonal_naive | ar");
  fit->add_option("--k1", o.k1, "Seasonal CPD rank");
  fit->add_option("--k2", o.k2, "Residual CPD rank");
  fit->add_option("--window", o.window, "Forecaster input window");
  fit->add_option("--hidden", o.hidden, "LSTM hidden size");
  fit->add_option("--epochs", o.epochs, "LSTM training epochs");
  fit->add_option("--lr", o.learning_rate, "LSTM learning rate");

  auto* fc = app.add_subcommand("forecast", "Forecast from a saved model");
  common(fc);
  data_opts(fc);
  fc->add_option("--model-file", o.model_file, "model.json written by fit")->required();
  fc->add_option("--horizon", o.horizon, "Weeks to forecast (default 52)");

  auto* ev = app.add_subcommand("evaluate", "Score forecasts against held-out truth");
  common(ev);
  data_opts(ev);
  ev->add_option("--forecast", o.forecasts, "forecast.csv or forecast.json, repeatable")->required();
  ev->add_option("--name", o.names, "Model label per --forecast");
  ev->add_option("--horizons", o.horizons, "Evaluation horizons (default 12 24 52)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: usage: " << msg << '\n';
    return 2;
  }

  try {
    o.command = app.get_subcommands().front()->get_name();
    const RunConfig cfg = resolve(o);
    if (o.command == "generate") cmd_generate(cfg);
    else if (o.command == "fit") cmd_fit(cfg);
    else if (o.command == "forecast") cmd_forecast(cfg);
    else cmd_evaluate(cfg);
    return 0;
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << e.category() << ": " << msg << '\n';
  } catch (const Json::exception& e) {
    err << "error: format: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace decom::cli

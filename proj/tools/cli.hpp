#pragma once

#include "decom/baselines.hpp"
#include "decom/model_io.hpp"
#include "decom/panel.hpp"
#include "decom/pipeline.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace decom::cli {

inline constexpr int kConfigSchemaVersion = 1;

// Values given on the command line. Unset optionals fall back to the config
// file, then to built-in defaults.
struct RunOptions {
  std::string command;
  std::string config_path;
  std::vector<std::string> sets;  // dotted.path=value applied to the config document
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string data;
  std::string meta;
  std::string model_file;
  std::vector<std::string> forecasts;
  std::vector<std::string> names;
  std::optional<std::string> model_kind;
  std::optional<std::string> cut_date;
  std::optional<std::string> train_end_date;
  std::optional<std::string> count_feature;
  std::optional<std::size_t> horizon;
  std::optional<std::vector<std::size_t>> horizons;
  std::optional<std::size_t> k1;
  std::optional<std::size_t> k2;
  std::optional<std::size_t> window;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
};

// Fully resolved settings for one command.
struct RunConfig {
  ScenarioConfig scenario;
  std::string model_kind = "decom";
  DecomConfig decom;
  BaselineConfig baseline;
  std::optional<Week> cut_date;
  std::optional<Week> train_end_date;
  std::string count_feature = "rsv_cases";
  std::size_t horizon = 52;
  std::vector<std::size_t> horizons{12, 24, 52};
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string data;
  std::string meta;
  std::string model_file;
  std::vector<std::string> forecasts;
  std::vector<std::string> names;
};

// Merges the config file, --set overrides and typed flags, then validates.
RunConfig resolve(const RunOptions& options);

// Writes panel.csv and panel_meta.json.
void cmd_generate(const RunConfig& cfg);
// Writes model.json.
void cmd_fit(const RunConfig& cfg);
// Writes forecast.csv and forecast.json.
void cmd_forecast(const RunConfig& cfg);
// Writes report.json, report_table.csv and peaks.csv.
void cmd_evaluate(const RunConfig& cfg);

// Parses argv, dispatches, and maps errors to `error: <category>: <message>`
// on `err`. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Loads a panel CSV, labelled by an optional metadata file.
PanelDataset load_panel(const RunConfig& cfg);

}  // namespace decom::cli

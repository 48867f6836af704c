#pragma once

#include "decom/tensor.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace decom {

using Week = std::chrono::sys_days;

// ISO-8601 calendar date, YYYY-MM-DD.
Week parse_iso_date(const std::string& text);
std::string format_iso_date(Week day);

enum class FeatureRole { kCount, kClimate, kCovid, kOther };

std::string to_string(FeatureRole role);
FeatureRole feature_role_from_string(const std::string& name);

struct Feature {
  std::string name;
  FeatureRole role = FeatureRole::kOther;

  friend bool operator==(const Feature&, const Feature&) = default;
};

// Test-period ground truth recorded by the scenario generator. Peak indices
// are relative to the first test week.
struct ScenarioTruth {
  std::vector<std::size_t> location_peaks;
  std::size_t country_peak = 0;

  friend bool operator==(const ScenarioTruth&, const ScenarioTruth&) = default;
};

// Labeled location x feature x week panel. Weeks [0, cut_index) are the
// undisturbed history, [cut_index, train_end) the disrupted history and
// [train_end, T) the held-out test period (possibly empty).
struct PanelDataset {
  Tensor3 tensor;
  std::vector<std::string> locations;
  std::vector<Feature> features;
  std::vector<Week> weeks;
  std::size_t cut_index = 0;
  std::size_t train_end = 0;
  std::optional<ScenarioTruth> truth;

  // Throws DataError when an invariant is broken.
  void validate() const;

  std::size_t count_feature() const;
  std::optional<std::size_t> feature_index(const std::string& name) const;
  std::size_t week_index(Week day) const;  // throws DataError if absent
  std::size_t test_length() const { return weeks.size() - train_end; }

  friend bool operator==(const PanelDataset&, const PanelDataset&) = default;
};

// Describes how to label a long-format CSV. Empty location/feature lists
// mean "sorted order of what the file contains"; features not listed get
// the `other` role unless named as the count feature.
struct PanelSchema {
  std::vector<std::string> locations;
  std::vector<Feature> features;
  std::string count_feature;
  bool missing_is_error = false;
  std::optional<Week> cut_week;
  std::optional<Week> train_end_week;
};

struct LoadReport {
  std::size_t rows = 0;
  std::size_t missing_cells = 0;
};

// Week that contains 2020-03-15, the default disruption cut.
Week default_cut_date();

// Header `location,feature,week,value`. Missing cells are zero-filled (or
// rejected), duplicates and malformed rows raise DataError with line numbers.
PanelDataset load_csv(const std::string& path, const PanelSchema& schema, LoadReport* report = nullptr);
PanelDataset read_csv(std::istream& in, const PanelSchema& schema, LoadReport* report = nullptr);

// Values printed with 17 significant digits so reloading is bit-exact.
void write_csv(const PanelDataset& d, const std::string& path);
void write_csv(const PanelDataset& d, std::ostream& out);

std::string format_value(double v);

// Maps each stage-2 feature to a stage-1 feature index by name.
struct FeatureAlignment {
  std::vector<std::string> stage2_names;
  std::vector<std::optional<std::size_t>> to_stage1;

  std::size_t matched_count() const;
  // Throws ContractViolation when an index is out of range or repeated.
  void validate(std::size_t stage1_features) const;

  friend bool operator==(const FeatureAlignment&, const FeatureAlignment&) = default;
};

FeatureAlignment align_by_name(const std::vector<Feature>& stage1, const std::vector<Feature>& stage2);

struct PanelSplit {
  Tensor3 x1;                          // L x M1 x T1, no covid-role features
  Tensor3 x2;                          // L x M2 x (T - T1), all features
  std::vector<Feature> stage1_features;
  std::vector<Feature> stage2_features;
  std::vector<std::size_t> stage1_source;  // dataset feature index per stage-1 feature
  FeatureAlignment alignment;
  std::size_t cut_index = 0;
  std::size_t end_index = 0;
};

PanelSplit split(const PanelDataset& d, Week cut_date, Week end_date);
PanelSplit split_at(const PanelDataset& d, std::size_t cut_index, std::size_t end_index);

// Synthetic disrupted-seasonality panel; the defaults are scenario S1. Count feature: a Gaussian bump per
// season with a south-to-north phase lag; counts inside the intervention
// window are scaled by (1 - suppression); seasons peaking after the window
// are moved by `resurgence_shift` weeks and the first of them is amplified
// by 1 + (resurgence_gain - 1) * suppression, so an undisturbed panel stays
// periodic. Climate features are phase-locked sinusoids and the
// covid feature ramps up inside the window and decays afterwards.
struct ScenarioConfig {
  int schema_version = 1;
  std::size_t locations = 10;
  std::size_t weeks = 340;
  std::size_t test_weeks = 52;
  std::size_t period = 52;
  std::string start_date = "2015-11-02";
  double peak_week = 44.0;      // season peak offset for the first location
  double phase_lag = 6.0;       // extra weeks of delay for the last location
  double amplitude = 1000.0;
  double amplitude_spread = 0.5;
  double bump_width = 6.0;      // Gaussian standard deviation in weeks
  double baseline = 20.0;
  std::size_t npi_start = 227;   // 0-based, half-open [npi_start, npi_end)
  std::size_t npi_end = 280;
  double suppression = 0.95;
  double resurgence_shift = -16.0;
  double resurgence_gain = 1.25;
  double noise = 0.02;          // noise sd as a fraction of amplitude
  std::size_t climate_features = 2;
  double covid_amplitude = 500.0;
  std::optional<std::size_t> cut_index;  // defaults to npi_start
  std::uint64_t seed = 7;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// The desk-scale disruption scenario used throughout the tests.
ScenarioConfig scenario_s1(std::uint64_t seed = 7);

PanelDataset generate_scenario(const ScenarioConfig& cfg);

// Per-(location, feature) min-max transform (x - offset) / span.
struct FiberScaling {
  std::size_t locations = 0;
  std::size_t features = 0;
  std::vector<double> offset;
  std::vector<double> span;

  static FiberScaling fit(const Tensor3& x);
  Tensor3 apply(const Tensor3& x) const;
  Tensor3 invert(const Tensor3& x) const;
  double invert_value(std::size_t l, std::size_t m, double v) const {
    return v * span[l * features + m] + offset[l * features + m];
  }
  FiberScaling select_features(const std::vector<std::size_t>& features) const;

  friend bool operator==(const FiberScaling&, const FiberScaling&) = default;
};

}  // namespace decom

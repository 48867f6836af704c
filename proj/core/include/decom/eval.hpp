#pragma once

#include "decom/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace decom {

double rmse(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);

// argmax(predicted) - argmax(actual); ties resolve to the earliest index.
long peak_diff(std::span<const double> actual, std::span<const double> predicted);
std::size_t peak_index(std::span<const double> series);

// Per-week sum over locations of one feature.
std::vector<double> aggregate_country(const Tensor3& x, std::size_t feature);
// Rows are locations, columns weeks.
std::vector<double> aggregate_country(const Matrix& series);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation across locations
};

struct HorizonMetrics {
  std::size_t horizon = 0;
  std::vector<double> rmse;  // per location
  std::vector<double> mae;
  MetricSummary rmse_summary;
  MetricSummary mae_summary;
  double country_rmse = 0.0;
  double country_mae = 0.0;
};

struct EvalReport {
  std::string model;
  std::vector<std::string> locations;
  std::vector<HorizonMetrics> horizons;
  std::size_t actual_peak = 0;     // country level, weeks after forecast start
  std::size_t predicted_peak = 0;
  long peak_diff = 0;
  std::vector<long> location_peak_diff;
  std::string sd_convention = "population";
};

MetricSummary summarize(std::span<const double> values);

// actual and predicted are L x W count series (W >= max horizon). Peak
// timing uses the first max(horizons) weeks.
EvalReport evaluate(const Matrix& actual, const Matrix& predicted, const std::vector<std::size_t>& horizons,
                    const std::string& model, const std::vector<std::string>& locations);

}  // namespace decom

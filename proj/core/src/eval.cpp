#include "decom/eval.hpp"

#include "decom/error.hpp"

#include <algorithm>
#include <cmath>

namespace decom {

namespace {

void check_pair(std::span<const double> a, std::span<const double> p, const char* what) {
  if (a.size() != p.size()) {
    throw ContractViolation(std::string(what) + ": series lengths differ (" + std::to_string(a.size()) +
                            " vs " + std::to_string(p.size()) + ")");
  }
  if (a.empty()) throw ContractViolation(std::string(what) + ": empty series");
}

std::span<const double> row_span(const Matrix& m, Eigen::Index r, std::size_t n) {
  return {m.data() + r * m.cols(), n};
}

}  // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted, "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - predicted[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - predicted[i]);
  return sum / static_cast<double>(actual.size());
}

std::size_t peak_index(std::span<const double> series) {
  if (series.empty()) throw ContractViolation("peak_index: empty series");
  return static_cast<std::size_t>(std::max_element(series.begin(), series.end()) - series.begin());
}

long peak_diff(std::span<const double> actual, std::span<const double> predicted) {
  return static_cast<long>(peak_index(predicted)) - static_cast<long>(peak_index(actual));
}

std::vector<double> aggregate_country(const Tensor3& x, std::size_t feature) {
  if (feature >= x.features()) throw ContractViolation("aggregate_country: feature out of range");
  std::vector<double> out(x.times(), 0.0);
  for (std::size_t l = 0; l < x.locations(); ++l)
    for (std::size_t t = 0; t < x.times(); ++t) out[t] += x(l, feature, t);
  return out;
}

std::vector<double> aggregate_country(const Matrix& series) {
  std::vector<double> out(static_cast<std::size_t>(series.cols()), 0.0);
  for (Eigen::Index l = 0; l < series.rows(); ++l)
    for (Eigen::Index t = 0; t < series.cols(); ++t) out[static_cast<std::size_t>(t)] += series(l, t);
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

EvalReport evaluate(const Matrix& actual, const Matrix& predicted, const std::vector<std::size_t>& horizons,
                    const std::string& model, const std::vector<std::string>& locations) {
  if (actual.rows() != predicted.rows()) throw ContractViolation("evaluate: location counts differ");
  if (horizons.empty()) throw ContractViolation("evaluate: no horizons requested");
  const std::size_t longest = *std::max_element(horizons.begin(), horizons.end());
  if (longest < 1) throw ContractViolation("evaluate: horizons must be at least 1");
  if (static_cast<std::size_t>(actual.cols()) < longest || static_cast<std::size_t>(predicted.cols()) < longest) {
    throw ContractViolation("evaluate: horizon " + std::to_string(longest) + " exceeds the available weeks");
  }
  if (!locations.empty() && locations.size() != static_cast<std::size_t>(actual.rows())) {
    throw ContractViolation("evaluate: location names do not match the series");
  }

  EvalReport report;
  report.model = model;
  report.locations = locations;
  const Matrix a = actual.leftCols(static_cast<Eigen::Index>(longest));
  const Matrix p = predicted.leftCols(static_cast<Eigen::Index>(longest));
  const auto country_a = aggregate_country(a);
  const auto country_p = aggregate_country(p);

  for (std::size_t h : horizons) {
    HorizonMetrics hm;
    hm.horizon = h;
    for (Eigen::Index l = 0; l < a.rows(); ++l) {
      hm.rmse.push_back(rmse(row_span(a, l, h), row_span(p, l, h)));
      hm.mae.push_back(mae(row_span(a, l, h), row_span(p, l, h)));
    }
    hm.rmse_summary = summarize(hm.rmse);
    hm.mae_summary = summarize(hm.mae);
    const std::span<const double> ca(country_a.data(), h), cp(country_p.data(), h);
    hm.country_rmse = rmse(ca, cp);
    hm.country_mae = mae(ca, cp);
    report.horizons.push_back(std::move(hm));
  }
  report.actual_peak = peak_index(country_a);
  report.predicted_peak = peak_index(country_p);
  report.peak_diff = peak_diff(country_a, country_p);
  for (Eigen::Index l = 0; l < a.rows(); ++l) {
    report.location_peak_diff.push_back(peak_diff(row_span(a, l, longest), row_span(p, l, longest)));
  }
  return report;
}

}  // namespace decom

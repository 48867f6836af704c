// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion (detail
// lines are indented) and exits nonzero when any criterion fails.

#include "cli.hpp"
#include "decom/baselines.hpp"
#include "decom/cpd.hpp"
#include "decom/error.hpp"
#include "decom/eval.hpp"
#include "decom/model_io.hpp"
#include "decom/pipeline.hpp"
#include "decom/temporal.hpp"
#include "oracles.hpp"
#include "s1_configs.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace decom;
namespace oracle = decom::testing_oracles;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Matrix count_rows(const Tensor3& x, std::size_t feature) {
  Matrix m(static_cast<Eigen::Index>(x.locations()), static_cast<Eigen::Index>(x.times()));
  for (std::size_t l = 0; l < x.locations(); ++l)
    for (std::size_t t = 0; t < x.times(); ++t)
      m(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(t)) = x(l, feature, t);
  return m;
}

Matrix test_truth(const PanelDataset& d) {
  const Tensor3 test = d.tensor.time_slice(d.train_end, d.weeks.size());
  return count_rows(test, d.count_feature());
}

// Index of the count feature among the features a DeCom model predicts.
std::size_t predicted_count(const DecomModel& m) {
  const auto feats = predicted_features(m);
  for (std::size_t j = 0; j < feats.size(); ++j)
    if (feats[j].role == FeatureRole::kCount) return j;
  throw ContractViolation("model predicts no count feature");
}

Outcome tensor_oracle() {
  double worst = 0.0;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 8), rank(1, 4);
  for (int i = 0; i < 50; ++i) {
    const auto l = static_cast<std::size_t>(dim(rng)), m = static_cast<std::size_t>(dim(rng)),
               t = static_cast<std::size_t>(dim(rng)), k = static_cast<std::size_t>(rank(rng));
    const FactorSet f = oracle::random_factors(l, m, t, k, 100 + static_cast<std::uint64_t>(i), i % 2 == 0);
    worst = std::max(worst, oracle::relative_error(reconstruct(f), oracle::reconstruct_loops(f)));
  }
  return {worst <= 1e-10, fmt("max relative error %.2e over 50 instances (bound 1e-10)", worst), {}};
}

Outcome cpd_recovery() {
  Outcome o;
  double worst_fit = 1.0, worst_rise = 0.0;
  for (std::size_t k = 1; k <= 3; ++k)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const FactorSet truth = oracle::random_factors(10, 5, 60, k, 500 + 10 * k + seed, true);
      CpdConfig cfg;
      cfg.rank = k;
      cfg.nonnegative = true;
      cfg.seed = seed;
      const CpdResult r = cpd_fit(reconstruct(truth), cfg);
      worst_fit = std::min(worst_fit, r.fit);
      for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
        worst_rise = std::max(worst_rise, r.objective_trace[i] - r.objective_trace[i - 1]);
      if (r.fit < 0.99) o.details.push_back(fmt("K=%zu seed=%llu fit %.5f", k, (unsigned long long)seed, r.fit));
    }
  o.pass = worst_fit >= 0.99 && worst_rise <= 1e-10;
  o.summary = fmt("min fit %.6f over 30 fits (bound 0.99), max objective increase %.2e (slack 1e-10)", worst_fit,
                  worst_rise);
  return o;
}

Outcome lstm_gradient() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(7000 + seed);
    std::uniform_int_distribution<int> k(1, 3), h(1, 4), w(1, 5);
    const auto K = static_cast<std::size_t>(k(rng)), H = static_cast<std::size_t>(h(rng));
    const LstmParams p = LstmParams::uniform(K, H, 0.5, rng);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix window(w(rng), static_cast<Eigen::Index>(K));
    for (auto& v : window.reshaped()) v = n(rng);
    RowVector target(static_cast<Eigen::Index>(K));
    for (auto& v : target) v = n(rng);
    const Vector fd = oracle::finite_difference_gradient(p, window, target);
    worst = std::max(worst, oracle::max_relative_error(lstm_backward(p, window, target).grad.flatten(), fd));
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 20 instances (bound 1e-4)", worst), {}};
}

Outcome ar_exactness() {
  ForecasterConfig c;
  c.kind = ForecasterKind::kAr;
  c.window = 52;
  const Matrix history = oracle::sinusoid(260, 52.0, {0.3});
  const Matrix path = forecast(train_forecaster(history, c), history, 52);
  const Matrix truth = oracle::sinusoid(52, 52.0, {0.3}, 260);
  const double err = std::sqrt((path - truth).squaredNorm() / 52.0);
  return {err < 1e-4, fmt("52-step rollout RMSE %.2e (bound 1e-4)", err), {}};
}

Outcome metrics() {
  const std::vector<double> a{0.0, 0.0}, p{3.0, 4.0};
  const double r = rmse(a, p), m = mae(a, p);
  bool ok = std::abs(r - std::sqrt(12.5)) <= 1e-12 && std::abs(m - 3.5) <= 1e-12;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 5.0);
  std::size_t violations = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(1 + static_cast<std::size_t>(i % 23)), y(x.size());
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    if (mae(x, y) > rmse(x, y) + 1e-12) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, fmt("rmse %.15f, mae %.15f, mae > rmse on %zu of 100 random pairs", r, m, violations), {}};
}

Outcome zero_residual() {
  const PanelDataset d = generate_scenario(s1::undisrupted(7));
  const DecomModel m = fit_decom(d, s1::decom());
  const double ratio = m.residual_norm / m.x2_norm;
  const Matrix truth = test_truth(d);
  const Tensor3 dp = predict(m, d.test_length());
  const double r_decom = evaluate(truth, count_rows(dp, predicted_count(m)), {d.test_length()}, "decom", d.locations)
                             .horizons[0]
                             .rmse_summary.mean;
  const BaselineModel b = fit_baseline(d, s1::detensor());
  const double r_det =
      evaluate(truth, count_rows(forecast_baseline(b, d.test_length()), d.count_feature()), {d.test_length()},
               "detensor", d.locations)
          .horizons[0]
          .rmse_summary.mean;
  const double gap = std::abs(r_decom - r_det) / std::min(r_decom, r_det);
  return {ratio < 0.10 && gap <= 0.15,
          fmt("residual/X2 norm %.4f (bound 0.10); test RMSE decom %.2f vs detensor %.2f, gap %.1f%% (bound 15%%)",
              ratio, r_decom, r_det, 100.0 * gap),
          {}};
}

Outcome disruption_s1() {
  Outcome o;
  int peak_ok = 0, beats_det = 0, beats_lstm = 0;
  for (std::uint64_t seed = 7; seed < 12; ++seed) {
    const PanelDataset d = generate_scenario(scenario_s1(seed));
    const Matrix truth = test_truth(d);
    const std::vector<std::size_t> h{52};

    const DecomModel dm = fit_decom(d, s1::decom());
    const EvalReport rd = evaluate(truth, count_rows(predict(dm, 52), predicted_count(dm)), h, "decom", d.locations);
    const BaselineModel bt = fit_baseline(d, s1::detensor());
    const EvalReport rt =
        evaluate(truth, count_rows(forecast_baseline(bt, 52), d.count_feature()), h, "detensor", d.locations);
    const BaselineModel bl = fit_baseline(d, s1::per_location_lstm());
    const EvalReport rl = evaluate(truth, count_rows(forecast_baseline(bl, 52), 0), h, "lstm", d.locations);

    const double a = rd.horizons[0].rmse_summary.mean, b = rt.horizons[0].rmse_summary.mean,
                 c = rl.horizons[0].rmse_summary.mean;
    peak_ok += std::abs(rd.peak_diff) <= 2;
    beats_det += a < b;
    beats_lstm += a < c;
    o.details.push_back(fmt("seed %llu: RMSE52 decom %.1f detensor %.1f lstm %.1f; country peak diff decom %+ld "
                            "detensor %+ld lstm %+ld",
                            (unsigned long long)seed, a, b, c, rd.peak_diff, rt.peak_diff, rl.peak_diff));
  }
  o.pass = peak_ok == 5 && beats_det == 5 && beats_lstm == 5;
  o.summary = fmt("decom peak within 2 weeks on %d/5 seeds, RMSE below detensor on %d/5, below lstm on %d/5", peak_ok,
                  beats_det, beats_lstm);
  return o;
}

struct Result {
  int code;
  std::string err;
};

Result cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "decom");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const fs::path& root) {
  Outcome o;
  if (cli_run({"generate", "--seed", "7", "--out-dir", (root / "gen").string()}).code != 0) {
    return {false, "generate failed", {}};
  }
  const std::vector<std::string> models{"decom", "detensor", "lstm", "seasonal_naive", "ar"};
  std::size_t identical = 0, total = 0;
  for (const auto& model : models) {
    std::string bytes[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / (model + std::to_string(run));
      const Result f = cli_run({"fit", "--data", (root / "gen/panel.csv").string(), "--meta",
                                (root / "gen/panel_meta.json").string(), "--model", model, "--seed", "11",
                                "--window", "12", "--hidden", "8", "--epochs", "5", "--out-dir", out.string()});
      const Result p = cli_run({"forecast", "--model-file", (out / "model.json").string(), "--out-dir", out.string()});
      if (f.code != 0 || p.code != 0) {
        o.details.push_back(model + ": " + f.err + p.err);
        continue;
      }
      bytes[run] = slurp(out / "model.json") + slurp(out / "forecast.csv") + slurp(out / "forecast.json");
    }
    ++total;
    if (!bytes[0].empty() && bytes[0] == bytes[1]) ++identical;
    else o.details.push_back(model + ": outputs differ");
  }
  o.pass = identical == total;
  o.summary = fmt("fit + forecast byte-identical for %zu/%zu model kinds", identical, total);
  return o;
}

Outcome round_trips(const fs::path& root) {
  Outcome o;
  const PanelDataset d = generate_scenario(scenario_s1(7));
  const fs::path csv = root / "roundtrip.csv";
  write_csv(d, csv.string());
  PanelSchema schema = schema_from_metadata(panel_metadata(d));
  PanelDataset back = load_csv(csv.string(), schema);
  back.truth = d.truth;
  const bool csv_ok = back == d;

  auto reload = [](const AnyModel& m) { return model_from_document(Json::parse(model_document(m).dump(2))); };
  std::size_t identical = 0, total = 0;

  DecomConfig dc = s1::decom();
  dc.seasonal.forecaster.epochs = 10;
  const DecomModel dm = fit_decom(d, dc);
  ++total;
  identical += predict(std::get<DecomModel>(reload(dm)), 52) == predict(dm, 52);

  for (auto kind : {BaselineKind::kDetensor, BaselineKind::kPerLocationLstm, BaselineKind::kSeasonalNaive,
                    BaselineKind::kAr}) {
    BaselineConfig bc = kind == BaselineKind::kDetensor ? s1::detensor() : s1::per_location_lstm();
    bc.kind = kind;
    bc.detensor.forecaster.epochs = 10;
    bc.per_location.epochs = 5;
    const BaselineModel bm = fit_baseline(d, bc);
    ++total;
    identical += forecast_baseline(std::get<BaselineModel>(reload(bm)), 52) == forecast_baseline(bm, 52);
  }
  o.pass = csv_ok && identical == total;
  o.summary = fmt("CSV write/load %s; persisted forecasts identical for %zu/%zu models",
                  csv_ok ? "identical" : "DIFFERS", identical, total);
  return o;
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / ("decom_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);

  // Criteria without a stated runtime bound get no budget.
  constexpr double kNoBudget = std::numeric_limits<double>::infinity();
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "tensor algebra oracle equivalence", 1.0, tensor_oracle},
      {2, "nonnegative CPD recovery", 30.0, cpd_recovery},
      {3, "LSTM gradient check", 10.0, lstm_gradient},
      {4, "AR exactness", 5.0, ar_exactness},
      {5, "metric correctness", kNoBudget, metrics},
      {6, "zero-residual reduction", kNoBudget, zero_residual},
      {7, "disruption scenario S1", 300.0, disruption_s1},
      {8, "determinism", kNoBudget, [&] { return determinism(root / "det"); }},
      {9, "round-trips", kNoBudget, [&] { return round_trips(root); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what(), {}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d (%s): %s; %.2f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.summary.c_str(), secs,
                in_time ? "" : fmt(" exceeds %.0f s budget", c.budget_s).c_str());
    for (const auto& line : o.details) std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(root);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

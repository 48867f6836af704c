#include "decom/panel.hpp"

#include "decom/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace decom {

using namespace std::chrono;

// ---------------------------------------------------------------------------
// Dates and roles

Week parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(text);
  in >> y >> dash1 >> m >> dash2 >> d;
  if (!in || dash1 != '-' || dash2 != '-' || text.size() != 10 || !in.eof()) {
    throw DataError("invalid ISO date '" + text + "'");
  }
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw DataError("invalid ISO date '" + text + "'");
  return sys_days{ymd};
}

std::string format_iso_date(Week day_point) {
  const year_month_day ymd{day_point};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string to_string(FeatureRole role) {
  switch (role) {
    case FeatureRole::kCount: return "count";
    case FeatureRole::kClimate: return "climate";
    case FeatureRole::kCovid: return "covid";
    default: return "other";
  }
}

FeatureRole feature_role_from_string(const std::string& name) {
  if (name == "count") return FeatureRole::kCount;
  if (name == "climate") return FeatureRole::kClimate;
  if (name == "covid") return FeatureRole::kCovid;
  if (name == "other") return FeatureRole::kOther;
  throw ConfigError("unknown feature role '" + name + "'");
}

Week default_cut_date() {
  const Week anchor = sys_days{year{2020} / March / 15};
  return anchor - (weekday{anchor} - Monday);
}

// ---------------------------------------------------------------------------
// PanelDataset

void PanelDataset::validate() const {
  if (tensor.empty()) throw DataError("panel has no values");
  const auto dims = tensor.dims();
  if (locations.size() != dims.locations || features.size() != dims.features ||
      weeks.size() != dims.times) {
    throw DataError("panel labels do not match tensor dimensions");
  }
  for (std::size_t t = 0; t < weeks.size(); ++t) {
    if (weekday{weeks[t]} != Monday) {
      throw DataError("week " + format_iso_date(weeks[t]) + " is not a Monday");
    }
    if (t > 0 && weeks[t] - weeks[t - 1] != days{7}) {
      throw DataError("weeks must be consecutive with 7-day spacing (at " +
                      format_iso_date(weeks[t]) + ")");
    }
  }
  const auto counts = std::count_if(features.begin(), features.end(),
                                    [](const Feature& f) { return f.role == FeatureRole::kCount; });
  if (counts != 1) throw DataError("panel needs exactly one count-role feature");
  if (cut_index > train_end || train_end > weeks.size()) {
    throw DataError("panel split indices out of order");
  }
}

std::size_t PanelDataset::count_feature() const {
  for (std::size_t m = 0; m < features.size(); ++m) {
    if (features[m].role == FeatureRole::kCount) return m;
  }
  throw DataError("panel has no count-role feature");
}

std::optional<std::size_t> PanelDataset::feature_index(const std::string& name) const {
  for (std::size_t m = 0; m < features.size(); ++m) {
    if (features[m].name == name) return m;
  }
  return std::nullopt;
}

std::size_t PanelDataset::week_index(Week day_point) const {
  const auto it = std::lower_bound(weeks.begin(), weeks.end(), day_point);
  if (it == weeks.end() || *it != day_point) {
    throw DataError("week " + format_iso_date(day_point) + " is outside the panel");
  }
  return static_cast<std::size_t>(it - weeks.begin());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": invalid value '" + s + "'");
  }
  return v;
}

struct Row {
  std::string location;
  std::string feature;
  Week week;
  double value;
  std::size_t line;
};

}  // namespace

std::string format_value(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

PanelDataset read_csv(std::istream& in, const PanelSchema& schema, LoadReport* report) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("empty panel CSV");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "location,feature,week,value") {
    throw DataError("line 1: expected header 'location,feature,week,value'");
  }

  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 4) {
      throw DataError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty location or feature");
    }
    Week w;
    try {
      w = parse_iso_date(fields[2]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (weekday{w} != Monday) {
      throw DataError("line " + std::to_string(line_no) + ": week " + fields[2] + " is not a Monday");
    }
    rows.push_back({fields[0], fields[1], w, parse_double(fields[3], line_no), line_no});
  }
  if (rows.empty()) throw DataError("panel CSV has no data rows");

  PanelDataset d;
  if (!schema.locations.empty()) {
    d.locations = schema.locations;
  } else {
    std::set<std::string> names;
    for (const auto& r : rows) names.insert(r.location);
    d.locations.assign(names.begin(), names.end());
  }
  if (!schema.features.empty()) {
    d.features = schema.features;
  } else {
    std::set<std::string> names;
    for (const auto& r : rows) names.insert(r.feature);
    for (const auto& n : names) {
      d.features.push_back({n, n == schema.count_feature ? FeatureRole::kCount : FeatureRole::kOther});
    }
  }
  std::set<Week> week_set;
  for (const auto& r : rows) week_set.insert(r.week);
  d.weeks.assign(week_set.begin(), week_set.end());

  std::unordered_map<std::string, std::size_t> loc_index, feat_index;
  for (std::size_t i = 0; i < d.locations.size(); ++i) loc_index[d.locations[i]] = i;
  for (std::size_t i = 0; i < d.features.size(); ++i) feat_index[d.features[i].name] = i;

  const std::size_t L = d.locations.size(), M = d.features.size(), T = d.weeks.size();
  d.tensor = Tensor3(L, M, T);
  std::vector<std::size_t> seen(L * M * T, 0);
  for (const auto& r : rows) {
    const auto li = loc_index.find(r.location);
    const auto fi = feat_index.find(r.feature);
    if (li == loc_index.end()) {
      throw DataError("line " + std::to_string(r.line) + ": unknown location '" + r.location + "'");
    }
    if (fi == feat_index.end()) {
      throw DataError("line " + std::to_string(r.line) + ": unknown feature '" + r.feature + "'");
    }
    const auto t = static_cast<std::size_t>(
        std::lower_bound(d.weeks.begin(), d.weeks.end(), r.week) - d.weeks.begin());
    const std::size_t cell = (li->second * M + fi->second) * T + t;
    if (seen[cell] != 0) {
      throw DataError("duplicate cell (" + r.location + ", " + r.feature + ", " +
                      format_iso_date(r.week) + ") at lines " + std::to_string(seen[cell]) +
                      " and " + std::to_string(r.line));
    }
    seen[cell] = r.line;
    d.tensor(li->second, fi->second, t) = r.value;
  }
  const auto missing = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), std::size_t{0}));
  if (missing > 0 && schema.missing_is_error) {
    throw DataError("panel has " + std::to_string(missing) + " missing cells");
  }
  if (report) *report = {rows.size(), missing};

  d.train_end = T;
  if (schema.train_end_week) {
    d.train_end = *schema.train_end_week == d.weeks.back() + days{7} ? T : d.week_index(*schema.train_end_week);
  }
  if (schema.cut_week) {
    d.cut_index = d.week_index(*schema.cut_week);
  } else if (const Week cut = default_cut_date(); cut > d.weeks.front() && cut <= d.weeks.back()) {
    d.cut_index = d.week_index(cut);
  }
  if (d.cut_index > d.train_end) d.cut_index = 0;
  d.validate();
  return d;
}

PanelDataset load_csv(const std::string& path, const PanelSchema& schema, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open panel CSV '" + path + "'");
  return read_csv(in, schema, report);
}

void write_csv(const PanelDataset& d, std::ostream& out) {
  out << "location,feature,week,value\n";
  const auto [L, M, T] = d.tensor.dims();
  std::vector<std::string> week_text;
  week_text.reserve(T);
  for (const auto& w : d.weeks) week_text.push_back(format_iso_date(w));
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t t = 0; t < T; ++t) {
        out << d.locations[l] << ',' << d.features[m].name << ',' << week_text[t] << ','
            << format_value(d.tensor(l, m, t)) << '\n';
      }
}

void write_csv(const PanelDataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_csv(d, out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Alignment and split

std::size_t FeatureAlignment::matched_count() const {
  return static_cast<std::size_t>(
      std::count_if(to_stage1.begin(), to_stage1.end(), [](const auto& v) { return v.has_value(); }));
}

void FeatureAlignment::validate(std::size_t stage1_features) const {
  if (stage2_names.size() != to_stage1.size()) {
    throw ContractViolation("feature alignment: name and index lists differ in length");
  }
  std::set<std::size_t> used;
  for (const auto& idx : to_stage1) {
    if (!idx) continue;
    if (*idx >= stage1_features) throw ContractViolation("feature alignment: index out of range");
    if (!used.insert(*idx).second) throw ContractViolation("feature alignment: index used twice");
  }
}

FeatureAlignment align_by_name(const std::vector<Feature>& stage1, const std::vector<Feature>& stage2) {
  FeatureAlignment a;
  for (const auto& f2 : stage2) {
    a.stage2_names.push_back(f2.name);
    std::optional<std::size_t> match;
    for (std::size_t i = 0; i < stage1.size(); ++i) {
      if (stage1[i].name == f2.name) match = i;
    }
    a.to_stage1.push_back(match);
  }
  return a;
}

PanelSplit split_at(const PanelDataset& d, std::size_t cut_index, std::size_t end_index) {
  const std::size_t T = d.weeks.size();
  if (end_index > T || end_index == 0) throw DataError("split: end index outside the panel");
  if (cut_index == 0 || cut_index >= end_index) {
    throw DataError("split: cut must fall strictly inside the training range");
  }
  PanelSplit s;
  s.cut_index = cut_index;
  s.end_index = end_index;
  for (std::size_t m = 0; m < d.features.size(); ++m) {
    if (d.features[m].role == FeatureRole::kCovid) continue;
    s.stage1_source.push_back(m);
    s.stage1_features.push_back(d.features[m]);
  }
  if (s.stage1_source.empty()) throw DataError("split: no features are observed before the cut");
  s.stage2_features = d.features;
  s.x1 = d.tensor.select_features(s.stage1_source).time_slice(0, cut_index);
  s.x2 = d.tensor.time_slice(cut_index, end_index);
  s.alignment = align_by_name(s.stage1_features, s.stage2_features);
  return s;
}

PanelSplit split(const PanelDataset& d, Week cut_date, Week end_date) {
  if (d.weeks.empty()) throw DataError("split: empty panel");
  if (cut_date <= d.weeks.front() || cut_date > d.weeks.back()) {
    throw DataError("split: cut date " + format_iso_date(cut_date) + " is outside the panel");
  }
  const std::size_t cut = d.week_index(cut_date);
  const std::size_t end = end_date == d.weeks.back() + days{7} ? d.weeks.size() : d.week_index(end_date);
  return split_at(d, cut, end);
}

// ---------------------------------------------------------------------------
// Scenario generator

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("scenario." + field + ": " + why);
  };
  if (schema_version != 1) fail("schema_version", "unsupported version " + std::to_string(schema_version));
  if (locations < 1) fail("locations", "must be at least 1");
  if (period < 2) fail("period", "must be at least 2");
  if (weeks < 2) fail("weeks", "must be at least 2");
  if (test_weeks >= weeks) fail("test_weeks", "must be smaller than weeks");
  if (npi_start < 1 || npi_start >= npi_end || npi_end > weeks) {
    fail("npi_start", "intervention window must satisfy 1 <= npi_start < npi_end <= weeks");
  }
  if (!(suppression >= 0.0 && suppression <= 1.0)) fail("suppression", "must lie in [0, 1]");
  if (!(amplitude >= 0.0)) fail("amplitude", "must be nonnegative");
  if (!(amplitude_spread >= 0.0 && amplitude_spread < 2.0)) fail("amplitude_spread", "must lie in [0, 2)");
  if (!(baseline >= 0.0)) fail("baseline", "must be nonnegative");
  if (!(bump_width > 0.0)) fail("bump_width", "must be positive");
  if (!(resurgence_gain >= 0.0)) fail("resurgence_gain", "must be nonnegative");
  if (!(noise >= 0.0)) fail("noise", "must be nonnegative");
  if (!(covid_amplitude >= 0.0)) fail("covid_amplitude", "must be nonnegative");
  if (climate_features > 2) fail("climate_features", "at most 2 climate features are generated");
  const std::size_t cut = cut_index.value_or(npi_start);
  if (cut < 1 || cut >= weeks - test_weeks) fail("cut_index", "must fall inside the training range");
  try {
    const Week start = parse_iso_date(start_date);
    if (weekday{start} != Monday) fail("start_date", "must be a Monday");
  } catch (const DataError&) {
    fail("start_date", "not an ISO date");
  }
}

ScenarioConfig scenario_s1(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.locations = 10;
  cfg.weeks = 340;
  cfg.period = 52;
  cfg.suppression = 0.95;
  cfg.npi_start = 227;
  cfg.npi_end = 280;
  cfg.resurgence_shift = -16.0;
  cfg.noise = 0.02;
  cfg.seed = seed;
  return cfg;
}

PanelDataset generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t L = cfg.locations;
  const std::size_t T = cfg.weeks;
  const auto period = static_cast<double>(cfg.period);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  PanelDataset d;
  const Week start = parse_iso_date(cfg.start_date);
  for (std::size_t t = 0; t < T; ++t) d.weeks.push_back(start + days{7 * static_cast<int>(t)});
  for (std::size_t l = 0; l < L; ++l) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "loc%02zu", l);
    d.locations.emplace_back(buf);
  }
  d.features.push_back({"rsv_cases", FeatureRole::kCount});
  if (cfg.climate_features >= 1) d.features.push_back({"temperature", FeatureRole::kClimate});
  if (cfg.climate_features >= 2) d.features.push_back({"humidity", FeatureRole::kClimate});
  d.features.push_back({"covid_cases", FeatureRole::kCovid});
  const std::size_t M = d.features.size();
  const std::size_t covid = M - 1;
  d.tensor = Tensor3(L, M, T);
  d.train_end = T - cfg.test_weeks;
  d.cut_index = cfg.cut_index.value_or(cfg.npi_start);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> amp(L);
  for (auto& a : amp) a = cfg.amplitude * (1.0 - cfg.amplitude_spread / 2.0 + cfg.amplitude_spread * uniform(rng));

  const double npi_start = static_cast<double>(cfg.npi_start);
  const double npi_end = static_cast<double>(cfg.npi_end);
  const double reach = 6.0 * cfg.bump_width + std::abs(cfg.resurgence_shift) + period;
  const auto first_season = static_cast<long>(std::floor((-reach - cfg.peak_week - cfg.phase_lag) / period));
  const auto last_season = static_cast<long>(std::ceil((static_cast<double>(T) + reach - cfg.peak_week) / period));

  for (std::size_t l = 0; l < L; ++l) {
    const double lag = L > 1 ? cfg.phase_lag * static_cast<double>(l) / static_cast<double>(L - 1) : 0.0;
    const double phase = cfg.peak_week + lag;
    for (std::size_t t = 0; t < T; ++t) {
      const auto tt = static_cast<double>(t);
      double season = 0.0;
      bool first_after_window = true;
      for (long s = first_season; s <= last_season; ++s) {
        double peak = phase + static_cast<double>(s) * period;
        double gain = 1.0;
        if (peak >= npi_end) {
          peak += cfg.resurgence_shift;
          // The rebound grows with how much of the previous season was suppressed.
          if (first_after_window) gain = 1.0 + (cfg.resurgence_gain - 1.0) * cfg.suppression;
          first_after_window = false;
        }
        const double z = (tt - peak) / cfg.bump_width;
        season += gain * std::exp(-0.5 * z * z);
      }
      d.tensor(l, 0, t) = cfg.baseline + amp[l] * season;

      // Cold, humid weeks line up with the undisturbed season peak.
      const double angle = kTwoPi * (tt - phase) / period;
      if (cfg.climate_features >= 1) d.tensor(l, 1, t) = 20.0 - 10.0 * std::cos(angle);
      if (cfg.climate_features >= 2) d.tensor(l, 2, t) = 60.0 + 15.0 * std::cos(angle);

      double cv = 0.0;
      if (tt >= npi_start && tt < npi_end) {
        cv = cfg.covid_amplitude * (tt - npi_start + 1.0) / (npi_end - npi_start);
      } else if (tt >= npi_end) {
        cv = cfg.covid_amplitude * std::exp(-(tt - npi_end + 1.0) / 8.0);
      }
      d.tensor(l, covid, t) = cv;
    }
  }

  // Noise is drawn in storage order so the panel depends only on the seed.
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t m = 0; m < M; ++m) {
      double sd = 0.0;
      switch (d.features[m].role) {
        case FeatureRole::kCount: sd = cfg.noise * cfg.amplitude; break;
        case FeatureRole::kClimate: sd = cfg.noise * 10.0; break;
        default: sd = cfg.noise * cfg.covid_amplitude; break;
      }
      for (std::size_t t = 0; t < T; ++t) {
        const double eps = normal(rng);
        if (m == covid && t < cfg.npi_start) continue;
        double v = d.tensor(l, m, t) + sd * eps;
        if (m == 0 && t >= cfg.npi_start && t < cfg.npi_end) v *= 1.0 - cfg.suppression;
        d.tensor(l, m, t) = std::max(0.0, v);
      }
    }
  }

  ScenarioTruth truth;
  std::vector<double> country(cfg.test_weeks, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t best = 0;
    for (std::size_t h = 0; h < cfg.test_weeks; ++h) {
      const double v = d.tensor(l, 0, d.train_end + h);
      country[h] += v;
      if (v > d.tensor(l, 0, d.train_end + best)) best = h;
    }
    truth.location_peaks.push_back(best);
  }
  truth.country_peak = static_cast<std::size_t>(
      std::max_element(country.begin(), country.end()) - country.begin());
  d.truth = std::move(truth);
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Scaling

FiberScaling FiberScaling::fit(const Tensor3& x) {
  FiberScaling s;
  s.locations = x.locations();
  s.features = x.features();
  s.offset.resize(s.locations * s.features);
  s.span.resize(s.locations * s.features);
  for (std::size_t l = 0; l < s.locations; ++l)
    for (std::size_t m = 0; m < s.features; ++m) {
      double lo = x(l, m, 0), hi = x(l, m, 0);
      for (std::size_t t = 1; t < x.times(); ++t) {
        lo = std::min(lo, x(l, m, t));
        hi = std::max(hi, x(l, m, t));
      }
      s.offset[l * s.features + m] = lo;
      s.span[l * s.features + m] = hi > lo ? hi - lo : 1.0;
    }
  return s;
}

Tensor3 FiberScaling::apply(const Tensor3& x) const {
  if (x.locations() != locations || x.features() != features) {
    throw ContractViolation("FiberScaling::apply: tensor shape does not match the scaling");
  }
  Tensor3 out = x;
  for (std::size_t l = 0; l < locations; ++l)
    for (std::size_t m = 0; m < features; ++m)
      for (std::size_t t = 0; t < x.times(); ++t) {
        out(l, m, t) = (x(l, m, t) - offset[l * features + m]) / span[l * features + m];
      }
  return out;
}

Tensor3 FiberScaling::invert(const Tensor3& x) const {
  if (x.locations() != locations || x.features() != features) {
    throw ContractViolation("FiberScaling::invert: tensor shape does not match the scaling");
  }
  Tensor3 out = x;
  for (std::size_t l = 0; l < locations; ++l)
    for (std::size_t m = 0; m < features; ++m)
      for (std::size_t t = 0; t < x.times(); ++t) out(l, m, t) = invert_value(l, m, x(l, m, t));
  return out;
}

FiberScaling FiberScaling::select_features(const std::vector<std::size_t>& feats) const {
  FiberScaling s;
  s.locations = locations;
  s.features = feats.size();
  for (std::size_t l = 0; l < locations; ++l)
    for (std::size_t m : feats) {
      if (m >= features) throw ContractViolation("FiberScaling::select_features: index out of range");
      s.offset.push_back(offset[l * features + m]);
      s.span.push_back(span[l * features + m]);
    }
  return s;
}

}  // namespace decom

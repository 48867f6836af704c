#pragma once

// JSON persistence for configs, fitted models, panel metadata and reports.
// Every top-level document carries "format" and "schema_version" fields;
// readers reject unknown formats and versions.

#include "decom/baselines.hpp"
#include "decom/cpd.hpp"
#include "decom/eval.hpp"
#include "decom/panel.hpp"
#include "decom/pipeline.hpp"
#include "decom/temporal.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <variant>

namespace decom {
void matrix_to_json(nlohmann::json& j, const Matrix& m);
void matrix_from_json(const nlohmann::json& j, Matrix& m);
}  // namespace decom

// Matrix lives in namespace Eigen, so ADL needs a serializer specialization.
template <>
struct nlohmann::adl_serializer<decom::Matrix> {
  static void to_json(json& j, const decom::Matrix& m) { decom::matrix_to_json(j, m); }
  static void from_json(const json& j, decom::Matrix& m) { decom::matrix_from_json(j, m); }
};

namespace decom {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

void to_json(Json& j, const CpdConfig& c);
void from_json(const Json& j, CpdConfig& c);
void to_json(Json& j, const ForecasterConfig& c);
void from_json(const Json& j, ForecasterConfig& c);
void to_json(Json& j, const StageConfig& c);
void from_json(const Json& j, StageConfig& c);
void to_json(Json& j, const DecomConfig& c);
void from_json(const Json& j, DecomConfig& c);
void to_json(Json& j, const BaselineConfig& c);
void from_json(const Json& j, BaselineConfig& c);
void to_json(Json& j, const Standardizer& s);
void from_json(const Json& j, Standardizer& s);
void to_json(Json& j, const Forecaster& f);
void from_json(const Json& j, Forecaster& f);
void to_json(Json& j, const FactorSet& f);
void from_json(const Json& j, FactorSet& f);
void to_json(Json& j, const CpdResult& r);
void from_json(const Json& j, CpdResult& r);
void to_json(Json& j, const FittedStage& s);
void from_json(const Json& j, FittedStage& s);
void to_json(Json& j, const FiberScaling& s);
void from_json(const Json& j, FiberScaling& s);
void to_json(Json& j, const FeatureAlignment& a);
void from_json(const Json& j, FeatureAlignment& a);
void to_json(Json& j, const Feature& f);
void from_json(const Json& j, Feature& f);
void to_json(Json& j, const ScenarioTruth& t);
void from_json(const Json& j, ScenarioTruth& t);
void to_json(Json& j, const ScenarioConfig& c);
void from_json(const Json& j, ScenarioConfig& c);
void to_json(Json& j, const DecomModel& m);
void from_json(const Json& j, DecomModel& m);
void to_json(Json& j, const BaselineModel& m);
void from_json(const Json& j, BaselineModel& m);
void to_json(Json& j, const EvalReport& r);

// Forecaster alone, as a versioned "decom-forecaster" document.
Json forecaster_document(const Forecaster& f);
Forecaster forecaster_from_document(const Json& j);

using AnyModel = std::variant<DecomModel, BaselineModel>;

// "decom-model" document; `model_kind` is decom or a baseline kind name.
Json model_document(const AnyModel& model);
AnyModel model_from_document(const Json& j);
std::string model_kind(const AnyModel& model);

// "decom-panel-meta" document: labels, roles, split weeks and generator truth.
Json panel_metadata(const PanelDataset& d, const ScenarioConfig* scenario = nullptr);
PanelSchema schema_from_metadata(const Json& j);

Json read_json_file(const std::string& path);
// Pretty-printed with a trailing newline.
void write_json_file(const Json& j, const std::string& path);

}  // namespace decom

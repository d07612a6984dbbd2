#pragma once

// JSON forms of reports, configurations and fitted models. Objects use
// sorted keys and shortest round-trip number formatting, so equal inputs
// always serialize to equal bytes.

#include "har/config.hpp"
#include "har/eval.hpp"

#include <json.hpp>

namespace har {

using Json = nlohmann::json;

/// Optional reals: null when undefined, the string "inf" when infinite.
Json real_or_marker(std::optional<double> v);
std::optional<double> real_from_marker(Json const &j);

Json to_json(EvalReport const &report);
Json to_json(PipelineConfig const &config);
Json to_json(ClassifierSpec const &spec);
ClassifierSpec classifier_spec_from_json(Json const &j);

Json to_json(PcaModel<double> const &model);
PcaModel<double> pca_from_json(Json const &j);

Json to_json(TrainedModel const &model);
TrainedModel model_from_json(Json const &j);

/// Fitted pipeline: optional PCA plus classifier, tagged with a format id.
Json to_json(FittedPipeline const &fitted);
FittedPipeline fitted_from_json(Json const &j);

} // namespace har

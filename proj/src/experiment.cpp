#include "har/experiment.hpp"
#include "har/random.hpp"
#include "har/serialization.hpp"

#include <fmt/format.h>

#include <fstream>

namespace har {

namespace {

constexpr std::uint64_t kSplitSeed = 1;
constexpr std::uint64_t kFoldSeed = 2;
constexpr std::uint64_t kModelSeed = 3;

void write_text(std::filesystem::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw Error(fmt::format("cannot write '{}'", path.string())); }
  out << text;
  if (!out) { throw Error(fmt::format("write to '{}' failed", path.string())); }
}

std::string scores_csv(ExperimentResult const &r)
{
  auto const &classes = r.final_model.model.classes;
  std::string out = "row,participant,activity,frame,true,predicted";
  for (int c : classes) { out += fmt::format(",score_{}", c); }
  out += '\n';
  auto const &m = r.validation_rows;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    auto const u = static_cast<std::size_t>(i);
    out += fmt::format("{},{},{},{},{},{}", r.partition.validation[u], m.participants[u], m.activities[u], m.frames[u],
                       (*m.labels)[u], r.validation_predictions[u]);
    for (Eigen::Index c = 0; c < r.validation_scores.cols(); ++c) { out += fmt::format(",{}", r.validation_scores(i, c)); }
    out += '\n';
  }
  return out;
}

} // namespace

ExperimentResult run_experiment(PipelineConfig const &config, DatasetManifest const &manifest)
{
  config.validate();
  for (auto const &seq : manifest.sequences) {
    auto const v = validate_sequence(seq);
    if (!v.empty()) {
      throw Error(fmt::format("participant {} activity {}: {} ({})", seq.participant_id, seq.activity.label,
                              to_string(v.front().kind), v.front().detail));
    }
  }

  ExperimentResult r;
  r.config = config;
  auto const matrix = build_feature_matrix(manifest, config.features, true, config.window_start);
  r.feature_dimension = matrix.dimension();

  SplitPlan plan = config.split;
  plan.seed = derive_seed(config.seed, kSplitSeed);
  r.partition = split(matrix, plan);

  ClassifierSpec classifier = config.classifier;
  classifier.seed = derive_seed(config.seed, kModelSeed);
  std::optional<double> const pca =
    config.pca.enabled ? std::optional<double>(config.pca.variance_threshold) : std::nullopt;

  auto const pool = matrix.subset(r.partition.pool());
  CvOptions cv;
  cv.folds = config.folds;
  cv.seed = derive_seed(config.seed, kFoldSeed);
  cv.stratify = config.split.stratify;
  cv.pca_threshold = pca;
  r.cross_validation = cross_validate(classifier, pool, cv);

  r.final_model = fit_pipeline({classifier, pca}, pool.rows, *pool.labels);
  if (!r.partition.validation.empty()) {
    r.validation_rows = matrix.subset(r.partition.validation);
    r.validation_predictions = predict_pipeline(r.final_model, r.validation_rows.rows);
    r.validation_scores = score_pipeline(r.final_model, r.validation_rows.rows);
    r.validation = compute_report(*r.validation_rows.labels, r.validation_predictions);
    r.validation->protocol = fmt::format("held-out validation ({} rows, model fitted on train+test)",
                                         r.partition.validation.size());
  }
  return r;
}

std::string confusion_csv(ConfusionMatrix const &confusion)
{
  std::string out = "true\\predicted";
  for (int c = 1; c <= kClassCount; ++c) { out += fmt::format(",{}", c); }
  out += '\n';
  for (int t = 0; t < kClassCount; ++t) {
    out += std::to_string(t + 1);
    for (int p = 0; p < kClassCount; ++p) { out += fmt::format(",{}", confusion(t, p)); }
    out += '\n';
  }
  return out;
}

void write_bundle(ExperimentResult const &r, std::filesystem::path const &dir, bool include_model)
{
  std::filesystem::create_directories(dir);

  EvalReport const &headline = r.validation ? *r.validation : r.cross_validation;
  Json report = to_json(headline);
  report["format"] = "har-report/1";
  report["cross_validation"] = to_json(r.cross_validation);
  report["partition"] = {{"train", r.partition.train.size()},
                         {"test", r.partition.test.size()},
                         {"validation", r.partition.validation.size()}};
  report["feature_dimension"] = r.feature_dimension;
  report["model_input_dimension"] = r.final_model.output_dimension();

  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "confusion.csv", confusion_csv(headline.confusion));
  write_text(dir / "config.json", to_json(r.config).dump(2) + "\n");
  write_text(dir / "scores.csv", scores_csv(r));
  if (r.final_model.pca) { write_text(dir / "pca.json", to_json(*r.final_model.pca).dump(2) + "\n"); }
  if (include_model) { write_text(dir / "model.json", to_json(r.final_model).dump() + "\n"); }
}

} // namespace har

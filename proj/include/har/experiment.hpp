#pragma once

#include "har/config.hpp"
#include "har/dataset.hpp"
#include "har/eval.hpp"

#include <filesystem>
#include <optional>

namespace har {

struct ExperimentResult
{
  PipelineConfig config;
  Partition partition;
  Eigen::Index feature_dimension = 0;
  EvalReport cross_validation;            // S folds over train + test
  std::optional<EvalReport> validation;   // final model on the held-out partition
  FittedPipeline final_model;             // fitted on train + test

  // Held-out rows, for the score table.
  FeatureMatrix validation_rows;
  std::vector<int> validation_predictions;
  RowMatrix validation_scores;
};

/// Seeds for the split, the folds and the classifier are derived from
/// config.seed, which is the only entropy source.
ExperimentResult run_experiment(PipelineConfig const &config, DatasetManifest const &manifest);

/// Writes report.json, confusion.csv, config.json and scores.csv into `dir`
/// (created if missing), plus pca.json when PCA is enabled and model.json
/// when `include_model` is set.
void write_bundle(ExperimentResult const &result, std::filesystem::path const &dir, bool include_model);

/// Confusion matrix as CSV with a header row and a header column.
std::string confusion_csv(ConfusionMatrix const &confusion);

} // namespace har

#pragma once

// Partitioning, stratified S-fold cross-validation and confusion-matrix
// metrics.

#include "har/classifiers.hpp"
#include "har/daefe.hpp"
#include "har/pca.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace har {

enum class Stratify { ClassLabel, Participant };

std::string_view to_string(Stratify s) noexcept;
Stratify parse_stratify(std::string_view text);

struct SplitPlan
{
  double train = 0.60;
  double test = 0.20;
  double validation = 0.20;
  Stratify stratify = Stratify::ClassLabel;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Partition
{
  std::vector<std::size_t> train, test, validation;  // ascending row indices

  /// train followed by test, ascending.
  std::vector<std::size_t> pool() const;
};

/// Class strata are split row-wise; participant strata assign whole
/// participants. Sizes are floor(frac * n) for test and validation, the
/// remainder goes to train.
Partition split(FeatureMatrix const &matrix, SplitPlan const &plan);

// ------------------------------------------------------------------ report

using ConfusionMatrix = Eigen::Matrix<std::int64_t, kClassCount, kClassCount, Eigen::RowMajor>;

struct ClassMetrics
{
  std::int64_t support = 0;          // true rows of this class
  std::optional<double> recall;      // sensitivity
  std::optional<double> precision;
  std::optional<double> specificity;
  // sensitivity / (1 - specificity); +inf when specificity is 1.
  std::optional<double> positive_likelihood_ratio;
};

struct EvalReport
{
  std::string protocol;
  ConfusionMatrix confusion = ConfusionMatrix::Zero();  // rows true, cols predicted
  double overall_accuracy = 0.0;
  std::array<ClassMetrics, kClassCount> per_class{};
  std::optional<double> stationary_accuracy;
  std::optional<double> dynamic_accuracy;
  std::vector<double> fold_accuracies;
  std::vector<std::int64_t> fold_sizes;

  std::int64_t total() const { return confusion.sum(); }
};

/// Labels must lie in 1..9 and the spans must have equal, nonzero length.
EvalReport compute_report(std::span<int const> truth, std::span<int const> predicted);
EvalReport report_from_confusion(ConfusionMatrix const &confusion);

// --------------------------------------------------------------- pipeline

/// Optional PCA in front of a classifier; PCA is fitted on training rows only.
struct ModelPipeline
{
  ClassifierSpec classifier;
  std::optional<double> pca_threshold;
};

struct FittedPipeline
{
  std::optional<PcaModel<double>> pca;
  TrainedModel model;

  Eigen::Index output_dimension() const { return pca ? pca->retained_k : model.dimension; }
};

FittedPipeline fit_pipeline(ModelPipeline const &pipeline, Eigen::Ref<RowMatrix const> const &rows,
                            std::span<int const> labels);
RowMatrix apply_pipeline_features(FittedPipeline const &fitted, Eigen::Ref<RowMatrix const> const &rows);
std::vector<int> predict_pipeline(FittedPipeline const &fitted, Eigen::Ref<RowMatrix const> const &rows);
RowMatrix score_pipeline(FittedPipeline const &fitted, Eigen::Ref<RowMatrix const> const &rows);

// ------------------------------------------------------ cross-validation

struct CvOptions
{
  int folds = 5;
  std::uint64_t seed = 0;
  Stratify stratify = Stratify::ClassLabel;
  std::optional<double> pca_threshold;
  // Explicit fold id per row, bypassing the stratified assignment.
  std::optional<std::vector<int>> fold_assignment;
};

/// Fold id per row. Class mode deals each class's shuffled rows round-robin,
/// carrying the position across classes so fold sizes differ by at most one.
std::vector<int> assign_folds(FeatureMatrix const &matrix, int folds, std::uint64_t seed, Stratify stratify);

/// Out-of-fold predictions aggregated into one report with per-fold accuracies.
EvalReport cross_validate(ClassifierSpec const &spec, FeatureMatrix const &matrix, CvOptions const &options);
EvalReport cross_validate(ClassifierSpec const &spec, FeatureMatrix const &matrix, int folds, std::uint64_t seed);

} // namespace har

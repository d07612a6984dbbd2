#include "har/eval.hpp"
#include "har/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace har {

std::string_view to_string(Stratify s) noexcept { return s == Stratify::ClassLabel ? "class" : "participant"; }

Stratify parse_stratify(std::string_view text)
{
  if (text == "class") { return Stratify::ClassLabel; }
  if (text == "participant") { return Stratify::Participant; }
  throw Error(fmt::format("unknown stratification '{}' (expected class or participant)", text));
}

void SplitPlan::validate() const
{
  for (double f : {train, test, validation}) {
    if (!(f >= 0.0 && f <= 1.0)) { throw Error("split fractions must lie in [0, 1]"); }
  }
  if (std::abs(train + test + validation - 1.0) > 1e-9) { throw Error("split fractions must sum to 1"); }
  if (!(train > 0.0)) { throw Error("training fraction must be positive"); }
}

std::vector<std::size_t> Partition::pool() const
{
  std::vector<std::size_t> out = train;
  out.insert(out.end(), test.begin(), test.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;
constexpr std::uint64_t kFoldTag = 0x666f6c64ULL;

std::size_t floor_share(double frac, std::size_t n)
{
  // Guard against 0.2 * 100 landing just below 20.
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

} // namespace

Partition split(FeatureMatrix const &matrix, SplitPlan const &plan)
{
  plan.validate();
  if (!matrix.labels) { throw Error("split requires a labeled feature matrix"); }
  auto const &labels = *matrix.labels;
  Partition p;

  if (plan.stratify == Stratify::ClassLabel) {
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < labels.size(); ++i) { strata[labels[i]].push_back(i); }
    for (auto &[label, rows] : strata) {
      if (rows.size() < 5) {
        throw Error(fmt::format("class {} has {} rows; at least 5 are needed for a three-way split", label, rows.size()));
      }
      Rng rng(derive_seed(plan.seed, kSplitTag, static_cast<std::uint64_t>(label)));
      rng.shuffle(std::span(rows));
      std::size_t const n_test = floor_share(plan.test, rows.size());
      std::size_t const n_val = floor_share(plan.validation, rows.size());
      p.test.insert(p.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
      p.validation.insert(p.validation.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test),
                          rows.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
      p.train.insert(p.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), rows.end());
    }
  } else {
    std::set<int> const ids(matrix.participants.begin(), matrix.participants.end());
    std::vector<int> people(ids.begin(), ids.end());
    if (people.size() < 5) {
      throw Error(fmt::format("{} participants; at least 5 are needed for a participant-wise split", people.size()));
    }
    Rng rng(derive_seed(plan.seed, kSplitTag, 0xffffULL));
    rng.shuffle(std::span(people));
    std::size_t const n_test = floor_share(plan.test, people.size());
    std::size_t const n_val = floor_share(plan.validation, people.size());
    std::map<int, int> role;  // 0 train, 1 test, 2 validation
    for (std::size_t i = 0; i < people.size(); ++i) { role[people[i]] = i < n_test ? 1 : i < n_test + n_val ? 2 : 0; }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      switch (role[matrix.participants[i]]) {
      case 1: p.test.push_back(i); break;
      case 2: p.validation.push_back(i); break;
      default: p.train.push_back(i); break;
      }
    }
  }
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.test.begin(), p.test.end());
  std::sort(p.validation.begin(), p.validation.end());
  return p;
}

// ================================================================= report

EvalReport report_from_confusion(ConfusionMatrix const &confusion)
{
  EvalReport r;
  r.confusion = confusion;
  auto const total = confusion.sum();
  if (total <= 0) { throw Error("confusion matrix is empty"); }
  r.overall_accuracy = static_cast<double>(confusion.trace()) / static_cast<double>(total);

  for (int c = 0; c < kClassCount; ++c) {
    auto const tp = confusion(c, c);
    auto const actual = confusion.row(c).sum();
    auto const predicted = confusion.col(c).sum();
    auto const fp = predicted - tp;
    auto const negatives = total - actual;
    auto const tn = negatives - fp;
    ClassMetrics &m = r.per_class[static_cast<std::size_t>(c)];
    m.support = actual;
    if (actual > 0) { m.recall = double(tp) / double(actual); }
    if (predicted > 0) { m.precision = double(tp) / double(predicted); }
    if (negatives > 0) { m.specificity = double(tn) / double(negatives); }
    if (m.recall && m.specificity) {
      m.positive_likelihood_ratio =
        fp == 0 ? std::numeric_limits<double>::infinity() : *m.recall / (1.0 - *m.specificity);
    }
  }

  auto group = [&](int lo, int hi) -> std::optional<double> {
    std::int64_t hit = 0, n = 0;
    for (int c = lo; c <= hi; ++c) {
      hit += confusion(c, c);
      n += confusion.row(c).sum();
    }
    if (n == 0) { return std::nullopt; }
    return double(hit) / double(n);
  };
  r.stationary_accuracy = group(0, 3);
  r.dynamic_accuracy = group(4, 8);
  return r;
}

EvalReport compute_report(std::span<int const> truth, std::span<int const> predicted)
{
  if (truth.size() != predicted.size()) { throw Error("truth and prediction lengths differ"); }
  if (truth.empty()) { throw Error("cannot report on zero rows"); }
  ConfusionMatrix cm = ConfusionMatrix::Zero();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!is_valid_label(truth[i]) || !is_valid_label(predicted[i])) {
      throw Error(fmt::format("row {}: label outside 1..9 (true {}, predicted {})", i, truth[i], predicted[i]));
    }
    ++cm(truth[i] - 1, predicted[i] - 1);
  }
  return report_from_confusion(cm);
}

// =============================================================== pipeline

FittedPipeline fit_pipeline(ModelPipeline const &pipeline, Eigen::Ref<RowMatrix const> const &rows,
                            std::span<int const> labels)
{
  if (!pipeline.pca_threshold) { return {std::nullopt, train(pipeline.classifier, rows, labels)}; }
  auto pca = pca_fit(rows, *pipeline.pca_threshold);
  RowMatrix const reduced = pca_transform(pca, rows);
  return {std::move(pca), train(pipeline.classifier, reduced, labels)};
}

RowMatrix apply_pipeline_features(FittedPipeline const &fitted, Eigen::Ref<RowMatrix const> const &rows)
{
  if (!fitted.pca) { return rows; }
  return pca_transform(*fitted.pca, rows);
}

std::vector<int> predict_pipeline(FittedPipeline const &fitted, Eigen::Ref<RowMatrix const> const &rows)
{
  return predict(fitted.model, apply_pipeline_features(fitted, rows));
}

RowMatrix score_pipeline(FittedPipeline const &fitted, Eigen::Ref<RowMatrix const> const &rows)
{
  return predict_scores(fitted.model, apply_pipeline_features(fitted, rows));
}

// ======================================================= cross-validation

std::vector<int> assign_folds(FeatureMatrix const &matrix, int folds, std::uint64_t seed, Stratify stratify)
{
  if (folds < 2) { throw Error("cross-validation needs at least 2 folds"); }
  if (!matrix.labels) { throw Error("cross-validation requires a labeled feature matrix"); }
  auto const &labels = *matrix.labels;
  std::vector<int> fold(labels.size(), -1);

  if (stratify == Stratify::ClassLabel) {
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < labels.size(); ++i) { strata[labels[i]].push_back(i); }
    std::size_t position = 0;
    for (auto &[label, rows] : strata) {
      if (rows.size() < static_cast<std::size_t>(folds)) {
        throw Error(fmt::format("class {} has {} rows, fewer than {} folds", label, rows.size(), folds));
      }
      Rng rng(derive_seed(seed, kFoldTag, static_cast<std::uint64_t>(label)));
      rng.shuffle(std::span(rows));
      for (auto r : rows) { fold[r] = static_cast<int>(position++ % static_cast<std::size_t>(folds)); }
    }
  } else {
    std::set<int> const ids(matrix.participants.begin(), matrix.participants.end());
    std::vector<int> people(ids.begin(), ids.end());
    if (people.size() < static_cast<std::size_t>(folds)) {
      throw Error(fmt::format("{} participants, fewer than {} folds", people.size(), folds));
    }
    Rng rng(derive_seed(seed, kFoldTag, 0xffffULL));
    rng.shuffle(std::span(people));
    std::map<int, int> of;
    for (std::size_t i = 0; i < people.size(); ++i) { of[people[i]] = static_cast<int>(i % static_cast<std::size_t>(folds)); }
    for (std::size_t i = 0; i < labels.size(); ++i) { fold[i] = of[matrix.participants[i]]; }
  }
  return fold;
}

EvalReport cross_validate(ClassifierSpec const &spec, FeatureMatrix const &matrix, CvOptions const &options)
{
  if (!matrix.labels) { throw Error("cross-validation requires a labeled feature matrix"); }
  auto const &labels = *matrix.labels;
  std::vector<int> const fold =
    options.fold_assignment ? *options.fold_assignment
                            : assign_folds(matrix, options.folds, options.seed, options.stratify);
  if (fold.size() != labels.size()) { throw Error("fold assignment length differs from row count"); }
  int const S = options.fold_assignment ? *std::max_element(fold.begin(), fold.end()) + 1 : options.folds;

  std::vector<int> out_of_fold(labels.size(), 0);
  std::vector<double> accuracies;
  std::vector<std::int64_t> sizes;
  for (int f = 0; f < S; ++f) {
    std::vector<std::size_t> train_idx, held_idx;
    for (std::size_t i = 0; i < fold.size(); ++i) { (fold[i] == f ? held_idx : train_idx).push_back(i); }
    if (held_idx.empty()) { continue; }
    auto const train_m = matrix.subset(train_idx);
    auto const held_m = matrix.subset(held_idx);
    ClassifierSpec fold_spec = spec;
    fold_spec.seed = derive_seed(spec.seed, kFoldTag, static_cast<std::uint64_t>(f));
    auto const fitted = fit_pipeline({fold_spec, options.pca_threshold}, train_m.rows, *train_m.labels);
    auto const pred = predict_pipeline(fitted, held_m.rows);
    std::int64_t hit = 0;
    for (std::size_t i = 0; i < held_idx.size(); ++i) {
      out_of_fold[held_idx[i]] = pred[i];
      hit += pred[i] == labels[held_idx[i]];
    }
    accuracies.push_back(double(hit) / double(held_idx.size()));
    sizes.push_back(static_cast<std::int64_t>(held_idx.size()));
  }

  auto report = compute_report(labels, out_of_fold);
  report.protocol = fmt::format("{}-fold cross-validation ({} stratified)", S, to_string(options.stratify));
  report.fold_accuracies = std::move(accuracies);
  report.fold_sizes = std::move(sizes);
  return report;
}

EvalReport cross_validate(ClassifierSpec const &spec, FeatureMatrix const &matrix, int folds, std::uint64_t seed)
{
  CvOptions o;
  o.folds = folds;
  o.seed = seed;
  return cross_validate(spec, matrix, o);
}

} // namespace har

#pragma once

#include "har/classifiers.hpp"
#include "har/daefe.hpp"
#include "har/eval.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace har {

struct PcaSettings
{
  bool enabled = false;
  double variance_threshold = 0.95;
};

struct PipelineConfig
{
  FeatureSpec features;
  PcaSettings pca;
  ClassifierSpec classifier;
  SplitPlan split;
  int folds = 5;
  std::uint64_t seed = 42;
  std::optional<std::size_t> window_start;  // default: centered window

  void validate() const;  // throws har::Error
};

// Flat `key = value` text. Keys mirror the long CLI flag names; `#` starts a
// comment. Classifier hyperparameter keys apply to the classifier named by
// the `classifier` key, which is processed first.

/// Keys that `apply_setting` understands, in serialization order.
std::vector<std::string_view> config_keys();

/// Throws har::Error for unknown keys, bad values, or hyperparameters that
/// do not belong to the current classifier.
void apply_setting(PipelineConfig &config, std::string_view key, std::string_view value);

PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
std::string format_config(PipelineConfig const &config);

} // namespace har

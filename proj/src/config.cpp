#include "har/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <sstream>

namespace har {

namespace {

std::string_view trim(std::string_view s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) { return {}; }
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T> T number(std::string_view key, std::string_view value)
{
  T out{};
  auto const *end = value.data() + value.size();
  auto const [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || value.empty()) {
    throw Error(fmt::format("{}: '{}' is not a valid number", key, value));
  }
  return out;
}

template <typename Spec> Spec &active(PipelineConfig &c, std::string_view key)
{
  if (auto *s = std::get_if<Spec>(&c.classifier.params)) { return *s; }
  throw Error(fmt::format("{} does not apply to classifier '{}'", key, c.classifier.name()));
}

// Round-trippable text for doubles.
std::string real(double v) { return fmt::format("{}", v); }

} // namespace

void PipelineConfig::validate() const
{
  classifier.validate();
  split.validate();
  if (folds < 2) { throw Error("folds must be >= 2"); }
  if (!(pca.variance_threshold > 0.0 && pca.variance_threshold <= 1.0)) {
    throw Error("pca-var must lie in (0, 1]");
  }
}

std::vector<std::string_view> config_keys()
{
  return {"modality", "joints", "dims",   "pca",   "pca-var", "classifier", "max-splits", "trees",
          "k",        "svm-c",  "svm-tol", "svm-max-iter", "hidden",  "epochs",     "lr",        "batch",
          "split",    "folds",  "stratify", "seed", "window-start"};
}

void apply_setting(PipelineConfig &c, std::string_view key, std::string_view value)
{
  value = trim(value);
  if (key == "modality") {
    c.features.modality = parse_modality(value);
  } else if (key == "joints") {
    c.features.subset = JointSubset::parse(value);
  } else if (key == "dims") {
    c.features.dims = parse_dims(value);
  } else if (key == "pca") {
    if (value == "on") {
      c.pca.enabled = true;
    } else if (value == "off") {
      c.pca.enabled = false;
    } else {
      throw Error(fmt::format("pca: expected on or off, got '{}'", value));
    }
  } else if (key == "pca-var") {
    c.pca.variance_threshold = number<double>(key, value);
  } else if (key == "classifier") {
    auto const seed = c.classifier.seed;
    c.classifier = classifier_from_name(value, seed);
  } else if (key == "max-splits") {
    int const v = number<int>(key, value);
    if (auto *t = std::get_if<FineTreeSpec>(&c.classifier.params)) {
      t->max_splits = v;
    } else {
      active<BaggedTreesSpec>(c, key).max_splits = v;
    }
  } else if (key == "trees") {
    active<BaggedTreesSpec>(c, key).n_trees = number<int>(key, value);
  } else if (key == "k") {
    active<FineKnnSpec>(c, key).k = number<int>(key, value);
  } else if (key == "svm-c") {
    active<CubicSvmSpec>(c, key).box = number<double>(key, value);
  } else if (key == "svm-tol") {
    active<CubicSvmSpec>(c, key).tolerance = number<double>(key, value);
  } else if (key == "svm-max-iter") {
    active<CubicSvmSpec>(c, key).max_iterations = number<std::int64_t>(key, value);
  } else if (key == "hidden") {
    active<MlpSpec>(c, key).hidden_width = number<int>(key, value);
  } else if (key == "epochs") {
    active<MlpSpec>(c, key).epochs = number<int>(key, value);
  } else if (key == "lr") {
    active<MlpSpec>(c, key).learning_rate = number<double>(key, value);
  } else if (key == "batch") {
    active<MlpSpec>(c, key).batch_size = number<int>(key, value);
  } else if (key == "split") {
    // Percentages "train,test,validation".
    double parts[3];
    std::string_view rest = value;
    for (int i = 0; i < 3; ++i) {
      auto const comma = rest.find(',');
      if ((i < 2) == (comma == std::string_view::npos)) {
        throw Error(fmt::format("split: expected three comma-separated percentages, got '{}'", value));
      }
      parts[i] = number<double>(key, trim(rest.substr(0, comma))) / 100.0;
      rest = i < 2 ? rest.substr(comma + 1) : std::string_view{};
    }
    c.split.train = parts[0];
    c.split.test = parts[1];
    c.split.validation = parts[2];
    c.split.validate();
  } else if (key == "folds") {
    c.folds = number<int>(key, value);
  } else if (key == "stratify") {
    c.split.stratify = parse_stratify(value);
  } else if (key == "seed") {
    c.seed = number<std::uint64_t>(key, value);
  } else if (key == "window-start") {
    c.window_start = number<std::size_t>(key, value);
  } else {
    throw Error(fmt::format("unknown configuration key '{}'", key));
  }
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base)
{
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (auto const hash = v.find('#'); hash != std::string_view::npos) { v = v.substr(0, hash); }
    v = trim(v);
    if (v.empty()) { continue; }
    auto const eq = v.find('=');
    if (eq == std::string_view::npos) { throw Error(fmt::format("config line {}: expected key = value", line_no)); }
    entries.emplace_back(std::string(trim(v.substr(0, eq))), std::string(trim(v.substr(eq + 1))));
  }
  for (auto const &[k, v] : entries) {
    if (k == "classifier") { apply_setting(base, k, v); }
  }
  for (auto const &[k, v] : entries) {
    if (k != "classifier") {
      try {
        apply_setting(base, k, v);
      } catch (Error const &e) {
        throw Error(fmt::format("config key '{}': {}", k, e.what()));
      }
    }
  }
  return base;
}

std::string format_config(PipelineConfig const &c)
{
  std::string out;
  auto put = [&out](std::string_view k, std::string const &v) { out += fmt::format("{} = {}\n", k, v); };
  put("modality", std::string(to_string(c.features.modality)));
  put("joints", c.features.subset.name());
  put("dims", std::to_string(to_int(c.features.dims)));
  put("pca", c.pca.enabled ? "on" : "off");
  put("pca-var", real(c.pca.variance_threshold));
  put("classifier", c.classifier.name());
  std::visit(
    [&](auto const &s) {
      using S = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<S, FineTreeSpec>) {
        put("max-splits", std::to_string(s.max_splits));
      } else if constexpr (std::is_same_v<S, BaggedTreesSpec>) {
        put("trees", std::to_string(s.n_trees));
        put("max-splits", std::to_string(s.max_splits));
      } else if constexpr (std::is_same_v<S, FineKnnSpec>) {
        put("k", std::to_string(s.k));
      } else if constexpr (std::is_same_v<S, CubicSvmSpec>) {
        put("svm-c", real(s.box));
        put("svm-tol", real(s.tolerance));
        put("svm-max-iter", std::to_string(s.max_iterations));
      } else if constexpr (std::is_same_v<S, MlpSpec>) {
        put("hidden", std::to_string(s.hidden_width));
        put("epochs", std::to_string(s.epochs));
        put("lr", real(s.learning_rate));
        put("batch", std::to_string(s.batch_size));
      }
    },
    c.classifier.params);
  put("split", fmt::format("{},{},{}", real(c.split.train * 100.0), real(c.split.test * 100.0),
                           real(c.split.validation * 100.0)));
  put("folds", std::to_string(c.folds));
  put("stratify", std::string(to_string(c.split.stratify)));
  put("seed", std::to_string(c.seed));
  if (c.window_start) { put("window-start", std::to_string(*c.window_start)); }
  return out;
}

} // namespace har

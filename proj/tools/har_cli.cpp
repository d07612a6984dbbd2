// Command-line entry point: synthetic data, feature extraction, single
// experiments and experiment grids.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include "har/config.hpp"
#include "har/dataset.hpp"
#include "har/experiment.hpp"
#include "har/serialization.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct UsageError : har::Error
{
  using har::Error::Error;
};

// ------------------------------------------------------------ config flags

struct ConfigFlags
{
  std::map<std::string, std::string> values;
  std::string config_file;

  void add_to(CLI::App &app)
  {
    app.add_option("--config", config_file, "Key = value file with any of the flags below; flags override it");
    auto flag = [&](std::string const &key, std::string const &help) {
      app.add_option("--" + key, values[key], help);
    };
    flag("modality", "coordinates | velocity | acceleration");
    flag("joints", "c9 | c18 | c28 | list:<Joint>,<Joint>,...");
    flag("dims", "2 | 3");
    flag("pca", "on | off");
    flag("pca-var", "Explained-variance threshold in (0, 1] (default 0.95)");
    flag("classifier", "tree | lda | svm-cubic | knn | bagged | mlp");
    flag("max-splits", "Tree / bagged: maximum splits per tree (default 100)");
    flag("trees", "Bagged: number of trees (default 30)");
    flag("k", "k-NN: neighbors (default 1)");
    flag("svm-c", "Cubic SVM: box constraint C (default 1)");
    flag("svm-tol", "Cubic SVM: KKT tolerance (default 1e-3)");
    flag("svm-max-iter", "Cubic SVM: SMO iteration cap");
    flag("hidden", "MLP: hidden width (default 175)");
    flag("epochs", "MLP: epochs (default 200)");
    flag("lr", "MLP: learning rate (default 0.01)");
    flag("batch", "MLP: mini-batch size (default 32)");
    flag("split", "train,test,validation percentages (default 60,20,20)");
    flag("folds", "Cross-validation folds (default 5)");
    flag("stratify", "class | participant");
    flag("seed", "Seed; the only entropy source (default 42)");
    flag("window-start", "Start the 51-frame window at this position instead of centering it");
  }

  har::PipelineConfig resolve(CLI::App const &app) const
  {
    try {
      har::PipelineConfig config;
      if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) { throw UsageError(fmt::format("cannot read config file '{}'", config_file)); }
        std::stringstream ss;
        ss << in.rdbuf();
        config = har::parse_config(ss.str());
      }
      auto given = [&](std::string const &key) { return app.get_option("--" + key)->count() > 0; };
      if (given("classifier")) { har::apply_setting(config, "classifier", values.at("classifier")); }
      for (auto key : har::config_keys()) {
        std::string const k(key);
        if (k != "classifier" && given(k)) { har::apply_setting(config, k, values.at(k)); }
      }
      config.validate();
      return config;
    } catch (UsageError const &) {
      throw;
    } catch (har::Error const &e) {
      throw UsageError(e.what());
    }
  }
};

std::vector<std::string> split_list(std::string const &text)
{
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) { out.push_back(item); }
  }
  return out;
}

void write_file(std::string const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw har::Error(fmt::format("cannot write '{}'", path)); }
  out << text;
}

// ---------------------------------------------------------------- commands

int cmd_synth(har::SynthSpec spec, std::string const &out)
{
  try {
    spec.validate();
  } catch (har::Error const &e) {
    throw UsageError(e.what());
  }
  auto const manifest = har::generate_synthetic(spec);
  har::write_dataset(manifest, std::filesystem::path(out));
  std::cout << fmt::format("wrote {} sequences ({} frames) to {}\n", manifest.sequences.size(), manifest.frame_count(), out);
  return 0;
}

int cmd_extract(std::string const &dataset, har::PipelineConfig const &config, bool unlabeled, std::string const &out)
{
  auto const manifest = har::read_dataset(dataset);
  auto const m = har::build_feature_matrix(manifest, config.features, !unlabeled, config.window_start);
  std::ofstream file(out, std::ios::binary);
  if (!file) { throw har::Error(fmt::format("cannot write '{}'", out)); }
  har::write_feature_matrix(m, config.features, file);
  std::cout << fmt::format("wrote {} x {} feature matrix{} to {}\n", m.size(), m.dimension(),
                           unlabeled ? "" : " with label column", out);
  return 0;
}

int cmd_evaluate(std::string const &dataset, har::PipelineConfig const &config, std::string const &out, bool save_model)
{
  auto const manifest = har::read_dataset(dataset);
  auto const result = har::run_experiment(config, manifest);
  har::write_bundle(result, out, save_model);
  if (save_model) {
    // Record the feature settings next to the fitted pipeline for `predict`.
    auto j = har::to_json(result.final_model);
    j["features"] = har::to_json(config);
    write_file((std::filesystem::path(out) / "model.json").string(), j.dump() + "\n");
  }
  std::cout << fmt::format("cross-validation accuracy {:.4f}", result.cross_validation.overall_accuracy);
  if (result.validation) { std::cout << fmt::format(", validation accuracy {:.4f}", result.validation->overall_accuracy); }
  std::cout << fmt::format("\nreport bundle written to {}\n", out);
  return 0;
}

int cmd_predict(std::string const &dataset, std::string const &model_path, std::string const &out)
{
  std::ifstream in(model_path);
  if (!in) { throw har::Error(fmt::format("cannot read '{}'", model_path)); }
  auto const j = har::Json::parse(in);
  auto const fitted = har::fitted_from_json(j);
  if (!j.contains("features")) { throw har::Error("model file lacks feature settings"); }
  auto const &f = j.at("features");
  har::PipelineConfig config;
  har::apply_setting(config, "modality", f.at("modality").get<std::string>());
  har::apply_setting(config, "joints", f.at("joints").get<std::string>());
  har::apply_setting(config, "dims", std::to_string(f.at("dims").get<int>()));
  if (!f.at("window_start").is_null()) { config.window_start = f.at("window_start").get<std::size_t>(); }

  auto const manifest = har::read_dataset(dataset);
  auto const m = har::build_feature_matrix(manifest, config.features, false, config.window_start);
  auto const labels = har::predict_pipeline(fitted, m.rows);
  std::string text = "participant,activity,frame,predicted\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    text += fmt::format("{},{},{},{}\n", m.participants[i], m.activities[i], m.frames[i], labels[i]);
  }
  write_file(out, text);
  std::cout << fmt::format("wrote {} predictions to {}\n", labels.size(), out);
  return 0;
}

struct GridAxes
{
  std::string classifier, pca, modality, joints, dims;
};

int cmd_grid(std::string const &dataset, har::PipelineConfig const &base, CLI::App const &sub, GridAxes const &axes,
             int jobs, std::string const &out)
{
  auto axis = [&](std::string const &flag, std::string const &text, std::string fallback) {
    if (sub.get_option(flag)->count() == 0) { return std::vector<std::string>{std::move(fallback)}; }
    auto items = split_list(text);
    if (items.empty()) { throw UsageError(fmt::format("{} names an empty grid axis", flag)); }
    return items;
  };
  auto const classifiers = axis("--grid-classifier", axes.classifier, base.classifier.name());
  auto const pcas = axis("--grid-pca", axes.pca, base.pca.enabled ? "on" : "off");
  auto const modalities = axis("--grid-modality", axes.modality, std::string(har::to_string(base.features.modality)));
  auto const subsets = axis("--grid-joints", axes.joints, base.features.subset.name());
  auto const dims = axis("--grid-dims", axes.dims, std::to_string(har::to_int(base.features.dims)));

  std::vector<har::PipelineConfig> cells;
  try {
    for (auto const &c : classifiers) {
      for (auto const &p : pcas) {
        for (auto const &m : modalities) {
          for (auto const &j : subsets) {
            for (auto const &d : dims) {
              har::PipelineConfig cell = base;
              if (c != base.classifier.name()) { har::apply_setting(cell, "classifier", c); }
              har::apply_setting(cell, "pca", p);
              har::apply_setting(cell, "modality", m);
              har::apply_setting(cell, "joints", j);
              har::apply_setting(cell, "dims", d);
              cell.validate();
              cells.push_back(std::move(cell));
            }
          }
        }
      }
    }
  } catch (UsageError const &) {
    throw;
  } catch (har::Error const &e) {
    throw UsageError(e.what());
  }

  auto const manifest = har::read_dataset(dataset);
  std::vector<std::string> rows(cells.size());
  std::vector<std::string> failures(cells.size());
  std::size_t next = 0;
  std::mutex lock;
  auto worker = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard g(lock);
        if (next >= cells.size()) { return; }
        i = next++;
      }
      auto const &cfg = cells[i];
      try {
        auto const r = har::run_experiment(cfg, manifest);
        auto const opt = [](std::optional<double> v) { return v ? fmt::format("{:.6f}", *v) : std::string("NA"); };
        rows[i] = fmt::format("{},{},{},{},{},{},{},{:.6f},{},{},{}", cfg.classifier.name(), cfg.pca.enabled ? "on" : "off",
                              har::to_string(cfg.features.modality), cfg.features.subset.name(),
                              har::to_int(cfg.features.dims), r.feature_dimension, r.final_model.output_dimension(),
                              r.cross_validation.overall_accuracy,
                              opt(r.validation ? std::optional(r.validation->overall_accuracy) : std::nullopt),
                              opt(r.cross_validation.stationary_accuracy), opt(r.cross_validation.dynamic_accuracy));
      } catch (std::exception const &e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::max(1, jobs); ++t) { pool.emplace_back(worker); }
  worker();
  for (auto &t : pool) { t.join(); }

  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) { throw har::Error(fmt::format("grid cell {}: {}", i + 1, failures[i])); }
  }
  std::string table = "classifier,pca,modality,joints,dims,feature_dimension,model_dimension,cv_accuracy,"
                      "validation_accuracy,cv_stationary_accuracy,cv_dynamic_accuracy\n";
  for (auto const &r : rows) { table += r + "\n"; }
  if (out.empty() || out == "-") {
    std::cout << table;
  } else {
    write_file(out, table);
    std::cout << fmt::format("wrote {} grid rows to {}\n", rows.size(), out);
  }
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Skeleton-based human activity recognition: features, classifiers and experiments"};
  app.require_subcommand(1);

  // synth
  auto *synth = app.add_subcommand("synth", "Generate a deterministic synthetic skeleton dataset");
  har::SynthSpec synth_spec;
  std::string synth_out;
  synth->add_option("--participants", synth_spec.n_participants, "Participants, 1..16")->capture_default_str();
  synth->add_option("--frames", synth_spec.frames_per_sequence, "Frames per sequence, >= 51")->capture_default_str();
  synth->add_option("--noise", synth_spec.noise_sigma, "Gaussian joint noise sigma in meters")->capture_default_str();
  synth->add_option("--seed", synth_spec.seed, "Generator seed")->capture_default_str();
  synth->add_flag("--depth-separated", synth_spec.depth_separated,
                  "Classes share the x/y posture and differ only in depth");
  synth->add_option("-o,--output", synth_out, "Output CSV path")->required();

  // extract
  auto *extract = app.add_subcommand("extract", "Build the posture feature matrix of a dataset");
  ConfigFlags extract_flags;
  std::string extract_in, extract_out;
  bool unlabeled = false;
  extract->add_option("dataset", extract_in, "Dataset CSV")->required();
  extract_flags.add_to(*extract);
  extract->add_flag("--unlabeled", unlabeled, "Omit the label column");
  extract->add_option("-o,--output", extract_out, "Output CSV path")->required();

  // evaluate
  auto *evaluate = app.add_subcommand("evaluate", "Run one experiment and write a report bundle");
  ConfigFlags eval_flags;
  std::string eval_in, eval_out;
  bool save_model = false;
  evaluate->add_option("dataset", eval_in, "Dataset CSV")->required();
  eval_flags.add_to(*evaluate);
  evaluate->add_flag("--save-model", save_model, "Also write model.json");
  evaluate->add_option("-o,--output", eval_out, "Report bundle directory")->required();

  // grid
  auto *grid = app.add_subcommand("grid", "Run the cartesian product of experiment settings");
  ConfigFlags grid_flags;
  std::string grid_in, grid_out;
  GridAxes axes;
  int jobs = 1;
  grid->add_option("dataset", grid_in, "Dataset CSV")->required();
  grid_flags.add_to(*grid);
  grid->add_option("--grid-classifier", axes.classifier, "Comma-separated classifiers");
  grid->add_option("--grid-pca", axes.pca, "Comma-separated on/off");
  grid->add_option("--grid-modality", axes.modality, "Comma-separated modalities");
  grid->add_option("--grid-joints", axes.joints, "Comma-separated subsets (c9,c18,c28)");
  grid->add_option("--grid-dims", axes.dims, "Comma-separated dims (2,3)");
  grid->add_option("--jobs", jobs, "Cells run in parallel")->check(CLI::PositiveNumber);
  grid->add_option("-o,--output", grid_out, "Output CSV path (default stdout)");

  // predict
  auto *predict = app.add_subcommand("predict", "Label a dataset with a saved model.json");
  std::string pred_in, pred_model, pred_out;
  predict->add_option("dataset", pred_in, "Dataset CSV")->required();
  predict->add_option("--model", pred_model, "model.json from evaluate --save-model")->required();
  predict->add_option("-o,--output", pred_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (synth->parsed()) { return cmd_synth(synth_spec, synth_out); }
    if (extract->parsed()) { return cmd_extract(extract_in, extract_flags.resolve(*extract), unlabeled, extract_out); }
    if (evaluate->parsed()) { return cmd_evaluate(eval_in, eval_flags.resolve(*evaluate), eval_out, save_model); }
    if (grid->parsed()) { return cmd_grid(grid_in, grid_flags.resolve(*grid), *grid, axes, jobs, grid_out); }
    if (predict->parsed()) { return cmd_predict(pred_in, pred_model, pred_out); }
  } catch (UsageError const &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

#include "har/config.hpp"
#include "har/dataset.hpp"
#include "har/experiment.hpp"
#include "har/random.hpp"
#include "har/serialization.hpp"

#include <doctest.h>
#include <fmt/format.h>
#include <unistd.h>

#include <fstream>
#include <set>

using namespace har;

namespace {

bool same_config(PipelineConfig const &a, PipelineConfig const &b)
{
  return to_json(a) == to_json(b);
}

DatasetManifest small_manifest()
{
  SynthSpec s;
  s.n_participants = 6;
  s.frames_per_sequence = 55;
  return generate_synthetic(s);
}

} // namespace

TEST_CASE("config text round-trip")
{
  PipelineConfig c;
  apply_setting(c, "classifier", "mlp");
  apply_setting(c, "hidden", "175");
  apply_setting(c, "lr", "0.003");
  apply_setting(c, "modality", "velocity");
  apply_setting(c, "joints", "list:Neck,RHand,LFoot");
  apply_setting(c, "dims", "2");
  apply_setting(c, "pca", "on");
  apply_setting(c, "pca-var", "0.9");
  apply_setting(c, "split", "70,15,15");
  apply_setting(c, "stratify", "participant");
  apply_setting(c, "folds", "4");
  apply_setting(c, "seed", "18446744073709551615");
  apply_setting(c, "window-start", "3");
  auto const text = format_config(c);
  auto const back = parse_config(text);
  CHECK(same_config(c, back));
  CHECK(format_config(back) == text);
  CHECK(back.seed == 18446744073709551615ULL);
  CHECK(std::get<MlpSpec>(back.classifier.params).learning_rate == 0.003);

  for (auto const *name : {"tree", "bagged", "knn", "svm-cubic", "lda"}) {
    PipelineConfig d;
    apply_setting(d, "classifier", name);
    CHECK(same_config(parse_config(format_config(d)), d));
  }
}

TEST_CASE("config parsing")
{
  SUBCASE("comments, blanks and classifier key order")
  {
    auto const c = parse_config("# grid cell\n\nk = 3   # neighbors\nclassifier = knn\n");
    CHECK(std::get<FineKnnSpec>(c.classifier.params).k == 3);
  }
  SUBCASE("rejections")
  {
    CHECK_THROWS_AS(parse_config("colour = red\n"), Error);
    CHECK_THROWS_AS(parse_config("modality\n"), Error);
    CHECK_THROWS_AS(parse_config("classifier = knn\ntrees = 5\n"), Error);
    CHECK_THROWS_AS(parse_config("dims = 4\n"), Error);
    CHECK_THROWS_AS(parse_config("pca-var = 0\n").validate(), Error);
    CHECK_THROWS_AS(parse_config("split = 60,20\n"), Error);
    CHECK_THROWS_AS(parse_config("split = 50,20,20\n"), Error);
    CHECK_THROWS_AS(parse_config("folds = 1\n").validate(), Error);
    CHECK_THROWS_AS(parse_config("seed = -1\n"), Error);
    CHECK_THROWS_AS(parse_config("k = 1.5\n"), Error);
  }
  SUBCASE("every key is understood")
  {
    CHECK(config_keys().size() == 21);
  }
}

TEST_CASE("json round-trips")
{
  SUBCASE("likelihood ratio marker")
  {
    CHECK(real_or_marker(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(real_or_marker(std::nullopt).is_null());
    CHECK(std::isinf(*real_from_marker(Json("inf"))));
    CHECK(real_from_marker(Json(0.25)) == 0.25);
  }
  SUBCASE("classifier specs")
  {
    for (auto const *name : {"tree", "bagged", "knn", "svm-cubic", "lda", "mlp"}) {
      auto const spec = classifier_from_name(name, 77);
      CHECK(classifier_spec_from_json(to_json(spec)) == spec);
    }
    CHECK(to_json(classifier_from_name("mlp")).at("w") == 175);
  }
  SUBCASE("fitted pipelines predict identically after reload")
  {
    auto const m = build_feature_matrix(small_manifest(), FeatureSpec{Modality::Coordinates, JointSubset::c9(), Dims::Three}, true);
    for (auto const *name : {"tree", "bagged", "knn", "svm-cubic", "lda", "mlp"}) {
      CAPTURE(name);
      auto spec = classifier_from_name(name, 5);
      if (auto *mlp = std::get_if<MlpSpec>(&spec.params)) { mlp->epochs = 3; }
      if (auto *bag = std::get_if<BaggedTreesSpec>(&spec.params)) { bag->n_trees = 4; }
      for (bool pca : {false, true}) {
        auto const fitted = fit_pipeline({spec, pca ? std::optional(0.95) : std::nullopt}, m.rows, *m.labels);
        auto const text = to_json(fitted).dump();
        auto const back = fitted_from_json(Json::parse(text));
        CHECK(to_json(back).dump() == text);
        auto const a = score_pipeline(fitted, m.rows), b = score_pipeline(back, m.rows);
        CHECK((a.array() == b.array()).all());
      }
    }
  }
}

TEST_CASE("experiment")
{
  auto const manifest = small_manifest();
  PipelineConfig config;
  config.classifier = classifier_from_name("tree");

  SUBCASE("deterministic end to end")
  {
    auto const a = run_experiment(config, manifest);
    auto const b = run_experiment(config, manifest);
    CHECK(to_json(a.cross_validation) == to_json(b.cross_validation));
    CHECK(to_json(*a.validation) == to_json(*b.validation));
    CHECK(to_json(a.final_model).dump() == to_json(b.final_model).dump());
    CHECK(a.partition.validation.size() + a.partition.train.size() + a.partition.test.size() == 6 * 9 * 51);
  }
  SUBCASE("validation rows never reach the model")
  {
    // Perturbing every held-out row must leave the trained parameters as
    // they were.
    auto const base = run_experiment(config, manifest);
    auto const matrix = build_feature_matrix(manifest, config.features, true);
    DatasetManifest changed = manifest;
    std::set<std::pair<int, std::uint32_t>> held;  // (sequence position, frame)
    for (auto row : base.partition.validation) {
      int const seq = (matrix.participants[row] - 1) * 9 + (matrix.activities[row] - 1);
      held.emplace(seq, matrix.frames[row]);
    }
    Rng rng(1);
    for (auto const &[seq, frame] : held) {
      auto &positions = changed.sequences[static_cast<std::size_t>(seq)].frames[frame].positions;
      for (int j = 2; j < kJointCount; ++j) { positions(j, 0) += 0.05 * rng.normal(); }
    }
    auto const perturbed = run_experiment(config, changed);
    CHECK(perturbed.partition.validation == base.partition.validation);
    CHECK(to_json(perturbed.final_model).dump() == to_json(base.final_model).dump());
    CHECK(to_json(perturbed.cross_validation) == to_json(base.cross_validation));
  }
  SUBCASE("bundle files")
  {
    auto const dir = std::filesystem::temp_directory_path() / fmt::format("har-bundle-{}", ::getpid());
    std::filesystem::remove_all(dir);
    auto c = config;
    c.pca.enabled = true;
    write_bundle(run_experiment(c, manifest), dir, true);
    for (auto const *f : {"report.json", "confusion.csv", "config.json", "scores.csv", "pca.json", "model.json"}) {
      CHECK(std::filesystem::exists(dir / f));
    }
    std::ifstream in(dir / "confusion.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      CHECK(std::count(line.begin(), line.end(), ',') == 9);
      ++lines;
    }
    CHECK(lines == 10);
    auto const report = Json::parse(std::ifstream(dir / "report.json"));
    CHECK(report.at("format") == "har-report/1");
    CHECK(report.contains("cross_validation"));
    std::filesystem::remove_all(dir);
  }
}

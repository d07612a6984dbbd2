#include "har/serialization.hpp"

#include <fmt/format.h>

#include <cmath>

namespace har {

namespace {

template <class... Ts> struct overloaded : Ts...
{
  using Ts::operator()...;
};

template <typename Derived> Json matrix_json(Eigen::MatrixBase<Derived> const &m)
{
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) { row.push_back(m(r, c)); }
    rows.push_back(std::move(row));
  }
  return rows;
}

RowMatrix matrix_from(Json const &j)
{
  auto const rows = static_cast<Eigen::Index>(j.size());
  auto const cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  RowMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    auto const &row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) { throw Error("ragged matrix in JSON"); }
    for (Eigen::Index c = 0; c < cols; ++c) { m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>(); }
  }
  return m;
}

template <typename Derived> Json vector_json(Eigen::MatrixBase<Derived> const &v)
{
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) { out.push_back(v(i)); }
  return out;
}

Eigen::VectorXd vector_from(Json const &j)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) { v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>(); }
  return v;
}

Json tree_json(DecisionTree const &t)
{
  Json nodes = Json::array();
  for (auto const &n : t.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"class", n.leaf_class},
                     {"counts", n.class_counts}});
  }
  return nodes;
}

DecisionTree tree_from(Json const &j)
{
  DecisionTree t;
  for (auto const &n : j) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.leaf_class = n.at("class").get<int>();
    node.class_counts = n.at("counts").get<std::vector<int>>();
    t.nodes.push_back(std::move(node));
  }
  return t;
}

Json metrics_json(ClassMetrics const &m, int label)
{
  return {{"label", label},
          {"name", std::string(ActivityClass(label).name())},
          {"support", m.support},
          {"recall", real_or_marker(m.recall)},
          {"precision", real_or_marker(m.precision)},
          {"specificity", real_or_marker(m.specificity)},
          {"positive_likelihood_ratio", real_or_marker(m.positive_likelihood_ratio)}};
}

} // namespace

Json real_or_marker(std::optional<double> v)
{
  if (!v) { return nullptr; }
  if (std::isinf(*v)) { return *v > 0 ? "inf" : "-inf"; }
  return *v;
}

std::optional<double> real_from_marker(Json const &j)
{
  if (j.is_null()) { return std::nullopt; }
  if (j.is_string()) {
    auto const s = j.get<std::string>();
    if (s == "inf") { return std::numeric_limits<double>::infinity(); }
    if (s == "-inf") { return -std::numeric_limits<double>::infinity(); }
    throw Error(fmt::format("unexpected marker '{}'", s));
  }
  return j.get<double>();
}

Json to_json(EvalReport const &r)
{
  Json per_class = Json::array();
  for (int c = 0; c < kClassCount; ++c) { per_class.push_back(metrics_json(r.per_class[static_cast<std::size_t>(c)], c + 1)); }
  return {{"protocol", r.protocol},
          {"confusion", matrix_json(r.confusion)},
          {"total", r.total()},
          {"overall_accuracy", r.overall_accuracy},
          {"per_class", per_class},
          {"group_accuracy",
           {{"stationary", real_or_marker(r.stationary_accuracy)}, {"dynamic", real_or_marker(r.dynamic_accuracy)}}},
          {"fold_accuracies", r.fold_accuracies},
          {"fold_sizes", r.fold_sizes}};
}

Json to_json(ClassifierSpec const &spec)
{
  Json j = {{"name", spec.name()}, {"seed", spec.seed}};
  std::visit(overloaded{[&](FineTreeSpec const &s) { j["max_splits"] = s.max_splits; },
                        [&](BaggedTreesSpec const &s) {
                          j["n_trees"] = s.n_trees;
                          j["max_splits"] = s.max_splits;
                        },
                        [&](FineKnnSpec const &s) { j["k"] = s.k; },
                        [&](CubicSvmSpec const &s) {
                          j["C"] = s.box;
                          j["tolerance"] = s.tolerance;
                          j["max_iterations"] = s.max_iterations;
                          j["kernel"] = "(1 + x.y)^3";
                        },
                        [&](LdaSpec const &) {},
                        [&](MlpSpec const &s) {
                          j["hidden_width"] = s.hidden_width;
                          j["w"] = s.hidden_width;
                          j["epochs"] = s.epochs;
                          j["learning_rate"] = s.learning_rate;
                          j["batch_size"] = s.batch_size;
                        }},
             spec.params);
  return j;
}

ClassifierSpec classifier_spec_from_json(Json const &j)
{
  auto spec = classifier_from_name(j.at("name").get<std::string>(), j.at("seed").get<std::uint64_t>());
  std::visit(overloaded{[&](FineTreeSpec &s) { s.max_splits = j.at("max_splits").get<int>(); },
                        [&](BaggedTreesSpec &s) {
                          s.n_trees = j.at("n_trees").get<int>();
                          s.max_splits = j.at("max_splits").get<int>();
                        },
                        [&](FineKnnSpec &s) { s.k = j.at("k").get<int>(); },
                        [&](CubicSvmSpec &s) {
                          s.box = j.at("C").get<double>();
                          s.tolerance = j.at("tolerance").get<double>();
                          s.max_iterations = j.at("max_iterations").get<std::int64_t>();
                        },
                        [&](LdaSpec &) {},
                        [&](MlpSpec &s) {
                          s.hidden_width = j.at("hidden_width").get<int>();
                          s.epochs = j.at("epochs").get<int>();
                          s.learning_rate = j.at("learning_rate").get<double>();
                          s.batch_size = j.at("batch_size").get<int>();
                        }},
             spec.params);
  return spec;
}

Json to_json(PipelineConfig const &c)
{
  return {{"modality", std::string(to_string(c.features.modality))},
          {"joints", c.features.subset.name()},
          {"dims", to_int(c.features.dims)},
          {"feature_dimension", c.features.dimension()},
          {"pca", {{"enabled", c.pca.enabled}, {"variance_threshold", c.pca.variance_threshold}}},
          {"classifier", to_json(c.classifier)},
          {"split",
           {{"train", c.split.train},
            {"test", c.split.test},
            {"validation", c.split.validation},
            {"stratify", std::string(to_string(c.split.stratify))}}},
          {"folds", c.folds},
          {"seed", c.seed},
          {"window_start", c.window_start ? Json(*c.window_start) : Json(nullptr)}};
}

Json to_json(PcaModel<double> const &m)
{
  return {{"mean", vector_json(m.mean)},
          {"components", matrix_json(m.components)},
          {"eigenvalues", vector_json(m.eigenvalues)},
          {"k", m.retained_k},
          {"variance_threshold", m.variance_threshold}};
}

PcaModel<double> pca_from_json(Json const &j)
{
  PcaModel<double> m;
  m.mean = vector_from(j.at("mean"));
  m.components = matrix_from(j.at("components"));
  m.eigenvalues = vector_from(j.at("eigenvalues"));
  m.retained_k = j.at("k").get<Eigen::Index>();
  m.variance_threshold = j.at("variance_threshold").get<double>();
  if (m.components.cols() != m.mean.size() || m.retained_k < 1 || m.retained_k > m.components.rows()) {
    throw Error("inconsistent PCA model");
  }
  return m;
}

Json to_json(TrainedModel const &model)
{
  Json params = std::visit(
    overloaded{[](TreeModel const &m) -> Json { return {{"tree", tree_json(m.tree)}}; },
               [](BaggedModel const &m) -> Json {
                 Json trees = Json::array();
                 for (auto const &t : m.trees) { trees.push_back(tree_json(t)); }
                 return {{"trees", trees}};
               },
               [](KnnModel const &m) -> Json {
                 return {{"samples", matrix_json(m.samples)}, {"targets", m.targets}, {"k", m.k}};
               },
               [](SvmModel const &m) -> Json {
                 Json machines = Json::array();
                 for (auto const &b : m.machines) {
                   machines.push_back({{"positive", b.positive},
                                       {"negative", b.negative},
                                       {"support", matrix_json(b.support)},
                                       {"coef", vector_json(b.coef)},
                                       {"support_index", b.support_index},
                                       {"bias", b.bias},
                                       {"iterations", b.iterations},
                                       {"converged", b.converged}});
                 }
                 return {{"center", vector_json(m.center)}, {"scale", vector_json(m.scale)}, {"machines", machines}};
               },
               [](LdaModel const &m) -> Json {
                 return {{"means", matrix_json(m.means)},
                         {"weights", matrix_json(m.weights)},
                         {"intercepts", vector_json(m.intercepts)},
                         {"regularized", m.regularized}};
               },
               [](MlpModel const &m) -> Json {
                 return {{"inputs", m.shape.inputs},
                         {"hidden", m.shape.hidden},
                         {"outputs", m.shape.outputs},
                         {"weights", vector_json(m.weights)}};
               }},
    model.params);
  return {{"spec", to_json(model.spec)}, {"classes", model.classes}, {"dimension", model.dimension}, {"parameters", params}};
}

TrainedModel model_from_json(Json const &j)
{
  TrainedModel model;
  model.spec = classifier_spec_from_json(j.at("spec"));
  model.classes = j.at("classes").get<std::vector<int>>();
  model.dimension = j.at("dimension").get<Eigen::Index>();
  auto const &p = j.at("parameters");
  model.params = std::visit(
    overloaded{[&](FineTreeSpec const &) -> ModelParams { return TreeModel{tree_from(p.at("tree"))}; },
               [&](BaggedTreesSpec const &) -> ModelParams {
                 BaggedModel m;
                 for (auto const &t : p.at("trees")) { m.trees.push_back(tree_from(t)); }
                 return m;
               },
               [&](FineKnnSpec const &) -> ModelParams {
                 return KnnModel{matrix_from(p.at("samples")), p.at("targets").get<std::vector<int>>(), p.at("k").get<int>()};
               },
               [&](CubicSvmSpec const &) -> ModelParams {
                 SvmModel m;
                 m.center = vector_from(p.at("center")).transpose();
                 m.scale = vector_from(p.at("scale")).transpose();
                 for (auto const &b : p.at("machines")) {
                   BinarySvm machine;
                   machine.positive = b.at("positive").get<int>();
                   machine.negative = b.at("negative").get<int>();
                   machine.support = matrix_from(b.at("support"));
                   machine.coef = vector_from(b.at("coef"));
                   machine.support_index = b.at("support_index").get<std::vector<int>>();
                   machine.bias = b.at("bias").get<double>();
                   machine.iterations = b.at("iterations").get<std::int64_t>();
                   machine.converged = b.at("converged").get<bool>();
                   if (machine.support.rows() == 0) { machine.support.resize(0, m.center.size()); }
                   m.machines.push_back(std::move(machine));
                 }
                 return m;
               },
               [&](LdaSpec const &) -> ModelParams {
                 LdaModel m;
                 m.means = matrix_from(p.at("means"));
                 m.weights = matrix_from(p.at("weights"));
                 m.intercepts = vector_from(p.at("intercepts"));
                 m.regularized = p.at("regularized").get<bool>();
                 return m;
               },
               [&](MlpSpec const &) -> ModelParams {
                 MlpModel m;
                 m.shape = {p.at("inputs").get<Eigen::Index>(), p.at("hidden").get<Eigen::Index>(),
                            p.at("outputs").get<Eigen::Index>()};
                 m.weights = vector_from(p.at("weights"));
                 if (m.weights.size() != m.shape.parameter_count()) { throw Error("MLP weights do not match shape"); }
                 return m;
               }},
    model.spec.params);
  return model;
}

Json to_json(FittedPipeline const &fitted)
{
  return {{"format", "har-model/1"},
          {"pca", fitted.pca ? to_json(*fitted.pca) : Json(nullptr)},
          {"model", to_json(fitted.model)}};
}

FittedPipeline fitted_from_json(Json const &j)
{
  if (j.value("format", "") != "har-model/1") { throw Error("not a har-model/1 document"); }
  FittedPipeline f;
  if (!j.at("pca").is_null()) { f.pca = pca_from_json(j.at("pca")); }
  f.model = model_from_json(j.at("model"));
  return f;
}

} // namespace har

#include "har/classifiers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace har {

template <class... Ts> struct overloaded : Ts...
{
  using Ts::operator()...;
};

std::string ClassifierSpec::name() const
{
  return std::visit(overloaded{[](FineTreeSpec const &) { return "tree"; },
                               [](BaggedTreesSpec const &) { return "bagged"; },
                               [](FineKnnSpec const &) { return "knn"; },
                               [](CubicSvmSpec const &) { return "svm-cubic"; },
                               [](LdaSpec const &) { return "lda"; }, [](MlpSpec const &) { return "mlp"; }},
                    params);
}

void ClassifierSpec::validate() const
{
  std::visit(overloaded{[](FineTreeSpec const &s) {
                          if (s.max_splits < 0) { throw Error("max_splits must be >= 0"); }
                        },
                        [](BaggedTreesSpec const &s) {
                          if (s.n_trees < 1) { throw Error("n_trees must be >= 1"); }
                          if (s.max_splits < 0) { throw Error("max_splits must be >= 0"); }
                        },
                        [](FineKnnSpec const &s) {
                          if (s.k < 1) { throw Error("k must be >= 1"); }
                        },
                        [](CubicSvmSpec const &s) {
                          if (!(s.box > 0.0)) { throw Error("SVM box constraint C must be > 0"); }
                          if (!(s.tolerance > 0.0)) { throw Error("SVM tolerance must be > 0"); }
                          if (s.max_iterations < 1) { throw Error("SVM iteration cap must be >= 1"); }
                        },
                        [](LdaSpec const &) {},
                        [](MlpSpec const &s) {
                          if (s.hidden_width < 1) { throw Error("hidden width must be >= 1"); }
                          if (s.epochs < 0) { throw Error("epochs must be >= 0"); }
                          if (s.batch_size < 1) { throw Error("batch size must be >= 1"); }
                          if (!(s.learning_rate > 0.0)) { throw Error("learning rate must be > 0"); }
                        }},
             params);
}

ClassifierSpec classifier_from_name(std::string_view name, std::uint64_t seed)
{
  ClassifierSpec spec;
  spec.seed = seed;
  if (name == "tree") {
    spec.params = FineTreeSpec{};
  } else if (name == "bagged") {
    spec.params = BaggedTreesSpec{};
  } else if (name == "knn") {
    spec.params = FineKnnSpec{};
  } else if (name == "svm-cubic") {
    spec.params = CubicSvmSpec{};
  } else if (name == "lda") {
    spec.params = LdaSpec{};
  } else if (name == "mlp") {
    spec.params = MlpSpec{};
  } else {
    throw Error(fmt::format("unknown classifier '{}' (expected tree, lda, svm-cubic, knn, bagged or mlp)", name));
  }
  return spec;
}

std::vector<int> encode_labels(std::span<int const> labels, std::span<int const> classes)
{
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto const it = std::lower_bound(classes.begin(), classes.end(), labels[i]);
    if (it == classes.end() || *it != labels[i]) { throw Error(fmt::format("label {} not among classes", labels[i])); }
    out[i] = static_cast<int>(it - classes.begin());
  }
  return out;
}

SvmModel fit_svm(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                 CubicSvmSpec const &spec)
{
  SvmModel m;
  auto const n = rows.rows();
  m.center = rows.colwise().mean();
  m.scale = Eigen::RowVectorXd::Ones(rows.cols());
  if (n > 1) {
    Eigen::RowVectorXd const var =
      (rows.rowwise() - m.center).colwise().squaredNorm() / static_cast<double>(n - 1);
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (var(c) > 0.0) { m.scale(c) = std::sqrt(var(c)); }
    }
  }
  RowMatrix const z = (rows.rowwise() - m.center).array().rowwise() / m.scale.array();

  for (int a = 0; a < class_count; ++a) {
    for (int b = a + 1; b < class_count; ++b) {
      std::vector<Eigen::Index> pick;
      std::vector<int> y;
      for (Eigen::Index i = 0; i < n; ++i) {
        int const t = targets[static_cast<std::size_t>(i)];
        if (t == a || t == b) {
          pick.push_back(i);
          y.push_back(t == a ? 1 : -1);
        }
      }
      RowMatrix sub(static_cast<Eigen::Index>(pick.size()), z.cols());
      for (std::size_t i = 0; i < pick.size(); ++i) { sub.row(static_cast<Eigen::Index>(i)) = z.row(pick[i]); }
      BinarySvm machine = train_binary_svm(sub, y, spec);
      machine.positive = a;
      machine.negative = b;
      m.machines.push_back(std::move(machine));
    }
  }
  return m;
}

// ------------------------------------------------------------------ train

TrainedModel train(ClassifierSpec const &spec, Eigen::Ref<RowMatrix const> const &rows, std::span<int const> labels)
{
  spec.validate();
  if (static_cast<std::size_t>(rows.rows()) != labels.size()) { throw Error("rows and labels differ in length"); }
  if (rows.rows() == 0 || rows.cols() == 0) { throw Error("training data is empty"); }
  if (!rows.allFinite()) { throw Error("training data contains a non-finite feature"); }

  std::set<int> const distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) { throw Error("training data holds a single class; need at least two"); }

  TrainedModel model;
  model.spec = spec;
  model.classes.assign(distinct.begin(), distinct.end());
  model.dimension = rows.cols();
  auto const targets = encode_labels(labels, model.classes);
  int const K = static_cast<int>(model.classes.size());

  model.params = std::visit(
    overloaded{
      [&](FineTreeSpec const &s) -> ModelParams { return TreeModel{grow_tree(rows, targets, K, s.max_splits)}; },
      [&](BaggedTreesSpec const &s) -> ModelParams { return grow_bagged(rows, targets, K, s, spec.seed); },
      [&](FineKnnSpec const &s) -> ModelParams { return KnnModel{rows, targets, s.k}; },
      [&](CubicSvmSpec const &s) -> ModelParams { return fit_svm(rows, targets, K, s); },
      [&](LdaSpec const &) -> ModelParams { return fit_lda(rows, targets, K); },
      [&](MlpSpec const &s) -> ModelParams { return fit_mlp(rows, targets, K, s, spec.seed); }},
    spec.params);
  return model;
}

TrainedModel train(ClassifierSpec const &spec, FeatureMatrix const &features)
{
  if (!features.labels) { throw Error("training requires a labeled feature matrix"); }
  return train(spec, features.rows, *features.labels);
}

// ---------------------------------------------------------------- predict

namespace {

int first_max(Eigen::Ref<Eigen::RowVectorXd const> const &v)
{
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) { best = i; }
  }
  return static_cast<int>(best);
}

void check_input(TrainedModel const &model, Eigen::Ref<RowMatrix const> const &rows)
{
  if (rows.cols() != model.dimension) {
    throw Error(fmt::format("model expects {} features, got {}", model.dimension, rows.cols()));
  }
}

// Votes and summed decision values of the one-vs-one machines for one row.
void svm_votes(SvmModel const &m, Eigen::Ref<Eigen::RowVectorXd const> const &x, Eigen::RowVectorXd &votes,
               Eigen::RowVectorXd &margins)
{
  Eigen::RowVectorXd const z = (x - m.center).array() / m.scale.array();
  votes.setZero();
  margins.setZero();
  for (auto const &machine : m.machines) {
    double const f = machine.decision(z);
    votes(f > 0.0 ? machine.positive : machine.negative) += 1.0;
    margins(machine.positive) += f;
    margins(machine.negative) -= f;
  }
}

int tree_vote(std::vector<DecisionTree> const &trees, Eigen::Ref<Eigen::RowVectorXd const> const &x, int K,
              Eigen::RowVectorXd &votes)
{
  votes.setZero(K);
  for (auto const &t : trees) { votes(t.nodes[static_cast<std::size_t>(t.leaf_of(x))].leaf_class) += 1.0; }
  return first_max(votes);
}

} // namespace

RowMatrix predict_scores(TrainedModel const &model, Eigen::Ref<RowMatrix const> const &rows)
{
  check_input(model, rows);
  auto const K = static_cast<Eigen::Index>(model.classes.size());
  RowMatrix out = RowMatrix::Zero(rows.rows(), K);

  std::visit(overloaded{[&](TreeModel const &m) {
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            auto const &leaf = m.tree.nodes[static_cast<std::size_t>(m.tree.leaf_of(rows.row(r)))];
                            double total = 0.0;
                            for (Eigen::Index c = 0; c < K; ++c) { total += leaf.class_counts[static_cast<std::size_t>(c)]; }
                            for (Eigen::Index c = 0; c < K; ++c) {
                              out(r, c) = leaf.class_counts[static_cast<std::size_t>(c)] / total;
                            }
                          }
                        },
                        [&](BaggedModel const &m) {
                          Eigen::RowVectorXd votes(K);
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            tree_vote(m.trees, rows.row(r), static_cast<int>(K), votes);
                            out.row(r) = votes / static_cast<double>(m.trees.size());
                          }
                        },
                        [&](KnnModel const &m) {
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            auto const nb = knn_neighbors(m, rows.row(r));
                            for (int i : nb) { out(r, m.targets[static_cast<std::size_t>(i)]) += 1.0 / double(nb.size()); }
                          }
                        },
                        [&](SvmModel const &m) {
                          Eigen::RowVectorXd votes(K), margins(K);
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            svm_votes(m, rows.row(r), votes, margins);
                            out.row(r) = votes / static_cast<double>(std::max<Eigen::Index>(1, K - 1));
                          }
                        },
                        [&](LdaModel const &m) {
                          RowMatrix const d = (rows * m.weights.transpose()).rowwise() + m.intercepts.transpose();
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            Eigen::RowVectorXd const e = (d.row(r).array() - d.row(r).maxCoeff()).exp().matrix();
                            out.row(r) = e / e.sum();
                          }
                        },
                        [&](MlpModel const &m) { out = mlp_forward(m.shape, m.weights, rows); }},
             model.params);
  return out;
}

std::vector<int> predict(TrainedModel const &model, Eigen::Ref<RowMatrix const> const &rows)
{
  check_input(model, rows);
  auto const K = static_cast<Eigen::Index>(model.classes.size());
  std::vector<int> index(static_cast<std::size_t>(rows.rows()));

  std::visit(overloaded{[&](TreeModel const &m) {
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            index[static_cast<std::size_t>(r)] =
                              m.tree.nodes[static_cast<std::size_t>(m.tree.leaf_of(rows.row(r)))].leaf_class;
                          }
                        },
                        [&](BaggedModel const &m) {
                          Eigen::RowVectorXd votes(K);
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            index[static_cast<std::size_t>(r)] = tree_vote(m.trees, rows.row(r), static_cast<int>(K), votes);
                          }
                        },
                        [&](KnnModel const &m) {
                          Eigen::RowVectorXd votes(K);
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            votes.setZero();
                            for (int i : knn_neighbors(m, rows.row(r))) { votes(m.targets[static_cast<std::size_t>(i)]) += 1.0; }
                            index[static_cast<std::size_t>(r)] = first_max(votes);
                          }
                        },
                        [&](SvmModel const &m) {
                          Eigen::RowVectorXd votes(K), margins(K);
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                            svm_votes(m, rows.row(r), votes, margins);
                            // Most votes, then largest summed decision value, then smallest label.
                            Eigen::Index best = 0;
                            for (Eigen::Index c = 1; c < K; ++c) {
                              if (votes(c) > votes(best) || (votes(c) == votes(best) && margins(c) > margins(best))) {
                                best = c;
                              }
                            }
                            index[static_cast<std::size_t>(r)] = static_cast<int>(best);
                          }
                        },
                        [&](LdaModel const &m) {
                          RowMatrix const d = (rows * m.weights.transpose()).rowwise() + m.intercepts.transpose();
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) { index[static_cast<std::size_t>(r)] = first_max(d.row(r)); }
                        },
                        [&](MlpModel const &m) {
                          RowMatrix const p = mlp_forward(m.shape, m.weights, rows);
                          for (Eigen::Index r = 0; r < rows.rows(); ++r) { index[static_cast<std::size_t>(r)] = first_max(p.row(r)); }
                        }},
             model.params);

  std::vector<int> labels(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) { labels[i] = model.classes[static_cast<std::size_t>(index[i])]; }
  return labels;
}

} // namespace har

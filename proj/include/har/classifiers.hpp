#pragma once

// The six classifier families behind one train/predict contract. Labels are
// arbitrary integers; internally every family works on class indices
// 0..K-1 in ascending label order, so "smallest label wins" and "smallest
// index wins" are the same tie-break.

#include "har/daefe.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace har {

// ------------------------------------------------------------------ specs

struct FineTreeSpec
{
  int max_splits = 100;
  bool operator==(FineTreeSpec const &) const = default;
};

struct BaggedTreesSpec
{
  int n_trees = 30;
  int max_splits = 100;
  bool operator==(BaggedTreesSpec const &) const = default;
};

struct FineKnnSpec
{
  int k = 1;
  bool operator==(FineKnnSpec const &) const = default;
};

struct CubicSvmSpec
{
  double box = 1.0;          // C
  double tolerance = 1e-3;   // KKT gap at which SMO stops
  std::int64_t max_iterations = 10'000'000;
  bool operator==(CubicSvmSpec const &) const = default;
};

struct LdaSpec
{
  bool operator==(LdaSpec const &) const = default;
};

struct MlpSpec
{
  int hidden_width = 175;
  int epochs = 200;
  double learning_rate = 0.01;
  int batch_size = 32;
  bool operator==(MlpSpec const &) const = default;
};

using ClassifierParams = std::variant<FineTreeSpec, BaggedTreesSpec, FineKnnSpec, CubicSvmSpec, LdaSpec, MlpSpec>;

struct ClassifierSpec
{
  ClassifierParams params = FineKnnSpec{};
  std::uint64_t seed = 0;

  /// CLI name: tree, bagged, knn, svm-cubic, lda or mlp.
  std::string name() const;
  void validate() const;  // throws har::Error
  bool operator==(ClassifierSpec const &) const = default;
};

/// Default-parameter spec for a CLI name.
ClassifierSpec classifier_from_name(std::string_view name, std::uint64_t seed = 0);

// ----------------------------------------------------------------- models

struct TreeNode
{
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // x[feature] <= threshold
  int right = -1;
  int leaf_class = 0;
  std::vector<int> class_counts;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(TreeNode const &) const = default;
};

struct DecisionTree
{
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int leaf_of(Eigen::Ref<Eigen::RowVectorXd const> const &x) const;
  int split_count() const;
  int depth() const;
  bool operator==(DecisionTree const &) const = default;
};

struct TreeModel
{
  DecisionTree tree;
};

struct BaggedModel
{
  std::vector<DecisionTree> trees;
};

struct KnnModel
{
  RowMatrix samples;
  std::vector<int> targets;  // class indices
  int k = 1;
};

struct BinarySvm
{
  int positive = 0;  // class index voted for when decision > 0
  int negative = 0;
  RowMatrix support;         // standardized support vectors
  Eigen::VectorXd coef;      // alpha_i * y_i
  std::vector<int> support_index;  // rows of the binary training set
  double bias = 0.0;         // decision = sum coef_i K(s_i, x) + bias
  std::int64_t iterations = 0;
  bool converged = true;

  double decision(Eigen::Ref<Eigen::RowVectorXd const> const &standardized_x) const;
};

struct SvmModel
{
  Eigen::RowVectorXd center;  // per-column standardization fitted on training data
  Eigen::RowVectorXd scale;
  std::vector<BinarySvm> machines;  // pairs (a, b), a < b, in lexicographic order
};

struct LdaModel
{
  RowMatrix means;              // K x d
  RowMatrix weights;            // K x d, Sigma^-1 mu_k
  Eigen::VectorXd intercepts;   // -1/2 mu_k' Sigma^-1 mu_k + ln prior_k
  bool regularized = false;
};

struct MlpShape
{
  Eigen::Index inputs = 0;
  Eigen::Index hidden = 0;
  Eigen::Index outputs = 0;

  /// W1 (hidden x inputs, row-major), b1, W2 (outputs x hidden, row-major), b2.
  Eigen::Index parameter_count() const noexcept { return hidden * inputs + hidden + outputs * hidden + outputs; }
};

struct MlpModel
{
  MlpShape shape;
  Eigen::VectorXd weights;
};

using ModelParams = std::variant<TreeModel, BaggedModel, KnnModel, SvmModel, LdaModel, MlpModel>;

struct TrainedModel
{
  ClassifierSpec spec;
  std::vector<int> classes;  // ascending labels seen in training
  Eigen::Index dimension = 0;
  ModelParams params;
};

// ------------------------------------------------------------- operations

TrainedModel train(ClassifierSpec const &spec, Eigen::Ref<RowMatrix const> const &rows, std::span<int const> labels);
TrainedModel train(ClassifierSpec const &spec, FeatureMatrix const &features);

std::vector<int> predict(TrainedModel const &model, Eigen::Ref<RowMatrix const> const &rows);

/// Per-class scores (columns follow model.classes): vote shares for tree,
/// bagged, k-NN and SVM, posteriors for LDA, softmax outputs for the MLP.
RowMatrix predict_scores(TrainedModel const &model, Eigen::Ref<RowMatrix const> const &rows);

// ----------------------------------------------- family-level entry points

/// Class-index targets for `labels` against ascending `classes`.
std::vector<int> encode_labels(std::span<int const> labels, std::span<int const> classes);

DecisionTree grow_tree(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                       int max_splits);

enum class Bootstrap { Random, Identity };

/// Identity hands every tree the training rows once each, in order.
BaggedModel grow_bagged(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                        BaggedTreesSpec const &spec, std::uint64_t seed, Bootstrap bootstrap = Bootstrap::Random);

/// Neighbor order: squared distance, then class index, then training row.
std::vector<int> knn_neighbors(KnnModel const &model, Eigen::Ref<Eigen::RowVectorXd const> const &query);

/// Binary SMO on standardized rows with y in {+1, -1}.
BinarySvm train_binary_svm(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> y, CubicSvmSpec const &spec);
double cubic_kernel(Eigen::Ref<Eigen::RowVectorXd const> const &a, Eigen::Ref<Eigen::RowVectorXd const> const &b);

/// Largest KKT residual of a binary machine on its own training set:
/// y*f(x) >= 1 at alpha = 0, y*f(x) = 1 inside the box, y*f(x) <= 1 at alpha = C.
double kkt_residual(BinarySvm const &machine, Eigen::Ref<RowMatrix const> const &rows, std::span<int const> y,
                    double box);

LdaModel fit_lda(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count);

SvmModel fit_svm(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                 CubicSvmSpec const &spec);

MlpModel fit_mlp(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                 MlpSpec const &spec, std::uint64_t seed);

struct LossAndGradient
{
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Mean softmax cross-entropy of the one-hidden-layer ReLU network and its
/// gradient with respect to the flat weight vector.
LossAndGradient mlp_loss_and_gradient(MlpShape const &shape, Eigen::Ref<Eigen::VectorXd const> const &weights,
                                      Eigen::Ref<RowMatrix const> const &inputs, std::span<int const> targets);

/// Glorot-uniform weights, zero biases.
Eigen::VectorXd mlp_initial_weights(MlpShape const &shape, std::uint64_t seed);

RowMatrix mlp_forward(MlpShape const &shape, Eigen::Ref<Eigen::VectorXd const> const &weights,
                      Eigen::Ref<RowMatrix const> const &inputs);

} // namespace har

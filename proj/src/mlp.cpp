#include "har/classifiers.hpp"
#include "har/random.hpp"

#include <cmath>
#include <numeric>

namespace har {

namespace {

using Weights = Eigen::Map<RowMatrix const>;
using Bias = Eigen::Map<Eigen::RowVectorXd const>;

struct Layers
{
  Weights w1, w2;
  Bias b1, b2;

  Layers(MlpShape const &s, double const *p)
    : w1(p, s.hidden, s.inputs)
    , w2(p + s.hidden * s.inputs + s.hidden, s.outputs, s.hidden)
    , b1(p + s.hidden * s.inputs, s.hidden)
    , b2(p + s.hidden * s.inputs + s.hidden + s.outputs * s.hidden, s.outputs)
  {}
};

void check_shape(MlpShape const &shape, Eigen::Index weights, Eigen::Index cols)
{
  if (weights != shape.parameter_count()) { throw Error("MLP weight vector does not match its shape"); }
  if (cols != shape.inputs) { throw Error("MLP input width does not match its shape"); }
}

// Row-wise softmax, shifted by the row maximum.
RowMatrix softmax(RowMatrix logits)
{
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    logits.row(r).array() -= logits.row(r).maxCoeff();
    logits.row(r) = logits.row(r).array().exp().matrix();
    logits.row(r) /= logits.row(r).sum();
  }
  return logits;
}

} // namespace

RowMatrix mlp_forward(MlpShape const &shape, Eigen::Ref<Eigen::VectorXd const> const &weights,
                      Eigen::Ref<RowMatrix const> const &inputs)
{
  check_shape(shape, weights.size(), inputs.cols());
  Layers const L(shape, weights.data());
  RowMatrix hidden = (inputs * L.w1.transpose()).rowwise() + L.b1;
  hidden = hidden.cwiseMax(0.0);
  return softmax((hidden * L.w2.transpose()).rowwise() + L.b2);
}

LossAndGradient mlp_loss_and_gradient(MlpShape const &shape, Eigen::Ref<Eigen::VectorXd const> const &weights,
                                      Eigen::Ref<RowMatrix const> const &inputs, std::span<int const> targets)
{
  check_shape(shape, weights.size(), inputs.cols());
  auto const n = inputs.rows();
  if (n == 0 || static_cast<std::size_t>(n) != targets.size()) { throw Error("MLP batch and targets disagree"); }
  Layers const L(shape, weights.data());

  RowMatrix const pre = (inputs * L.w1.transpose()).rowwise() + L.b1;
  RowMatrix const hidden = pre.cwiseMax(0.0);
  RowMatrix const logits = (hidden * L.w2.transpose()).rowwise() + L.b2;

  LossAndGradient out;
  RowMatrix delta_out(n, shape.outputs);
  for (Eigen::Index r = 0; r < n; ++r) {
    double const top = logits.row(r).maxCoeff();
    Eigen::RowVectorXd const e = (logits.row(r).array() - top).exp().matrix();
    double const z = e.sum();
    auto const t = targets[static_cast<std::size_t>(r)];
    out.loss += std::log(z) - (logits(r, t) - top);
    delta_out.row(r) = e / z;
    delta_out(r, t) -= 1.0;
  }
  out.loss /= static_cast<double>(n);
  delta_out /= static_cast<double>(n);

  RowMatrix delta_hidden = delta_out * L.w2;
  delta_hidden = delta_hidden.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());

  out.gradient.resize(shape.parameter_count());
  double *g = out.gradient.data();
  Eigen::Map<RowMatrix>(g, shape.hidden, shape.inputs) = delta_hidden.transpose() * inputs;
  g += shape.hidden * shape.inputs;
  Eigen::Map<Eigen::RowVectorXd>(g, shape.hidden) = delta_hidden.colwise().sum();
  g += shape.hidden;
  Eigen::Map<RowMatrix>(g, shape.outputs, shape.hidden) = delta_out.transpose() * hidden;
  g += shape.outputs * shape.hidden;
  Eigen::Map<Eigen::RowVectorXd>(g, shape.outputs) = delta_out.colwise().sum();
  return out;
}

Eigen::VectorXd mlp_initial_weights(MlpShape const &shape, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, 0x6d6c70ULL));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(shape.parameter_count());
  double const l1 = std::sqrt(6.0 / static_cast<double>(shape.inputs + shape.hidden));
  double const l2 = std::sqrt(6.0 / static_cast<double>(shape.hidden + shape.outputs));
  Eigen::Index const n1 = shape.hidden * shape.inputs;
  for (Eigen::Index i = 0; i < n1; ++i) { w(i) = rng.uniform(-l1, l1); }
  Eigen::Index const o2 = n1 + shape.hidden;
  for (Eigen::Index i = 0; i < shape.outputs * shape.hidden; ++i) { w(o2 + i) = rng.uniform(-l2, l2); }
  return w;
}

MlpModel fit_mlp(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                 MlpSpec const &spec, std::uint64_t seed)
{
  MlpModel m;
  m.shape = {rows.cols(), spec.hidden_width, class_count};
  m.weights = mlp_initial_weights(m.shape, seed);

  auto const n = static_cast<std::size_t>(rows.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x73676400ULL));
  auto const batch = static_cast<std::size_t>(spec.batch_size);

  RowMatrix xb;
  std::vector<int> tb;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < n; start += batch) {
      std::size_t const len = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(len), rows.cols());
      tb.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(order[start + i]));
        tb[i] = targets[order[start + i]];
      }
      auto const lg = mlp_loss_and_gradient(m.shape, m.weights, xb, tb);
      m.weights -= spec.learning_rate * lg.gradient;
    }
  }
  return m;
}

} // namespace har

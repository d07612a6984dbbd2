#include "har/classifiers.hpp"

#include <cmath>
#include <limits>

namespace har {

double cubic_kernel(Eigen::Ref<Eigen::RowVectorXd const> const &a, Eigen::Ref<Eigen::RowVectorXd const> const &b)
{
  double const t = 1.0 + a.dot(b);
  return t * t * t;
}

double BinarySvm::decision(Eigen::Ref<Eigen::RowVectorXd const> const &x) const
{
  double f = bias;
  for (Eigen::Index i = 0; i < support.rows(); ++i) { f += coef(i) * cubic_kernel(support.row(i), x); }
  return f;
}

namespace {

// Kernel rows, either from a precomputed Gram matrix or on demand.
class KernelSource
{
public:
  static constexpr Eigen::Index kDenseLimit = 4000;

  explicit KernelSource(Eigen::Ref<RowMatrix const> const &rows)
    : rows_(rows)
  {
    if (rows.rows() <= kDenseLimit) {
      gram_ = (rows * rows.transpose()).array() + 1.0;
      gram_ = gram_.array().cube();
    }
    diag_.resize(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) { diag_(i) = cubic_kernel(rows.row(i), rows.row(i)); }
  }

  double diag(Eigen::Index i) const { return diag_(i); }

  Eigen::VectorXd row(Eigen::Index i) const
  {
    if (gram_.size() > 0) { return gram_.row(i).transpose(); }
    Eigen::VectorXd const dots = rows_ * rows_.row(i).transpose();
    return (dots.array() + 1.0).cube().matrix();
  }

private:
  Eigen::Ref<RowMatrix const> rows_;
  RowMatrix gram_;
  Eigen::VectorXd diag_;
};

} // namespace

// SMO with second-order working-set selection on the dual
//   min 1/2 a'Qa - e'a,  0 <= a <= C,  y'a = 0,  Q_ij = y_i y_j K_ij.
BinarySvm train_binary_svm(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> y, CubicSvmSpec const &spec)
{
  auto const n = rows.rows();
  if (n < 2) { throw Error("binary SVM needs at least two rows"); }
  double const C = spec.box;
  double const tau = 1e-12;
  KernelSource const K(rows);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  auto yi = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };
  auto in_up = [&](Eigen::Index t) { return (yi(t) > 0 && alpha(t) < C) || (yi(t) < 0 && alpha(t) > 0); };
  auto in_low = [&](Eigen::Index t) { return (yi(t) > 0 && alpha(t) > 0) || (yi(t) < 0 && alpha(t) < C); };

  BinarySvm out;
  std::int64_t iter = 0;
  bool converged = false;
  for (; iter < spec.max_iterations; ++iter) {
    Eigen::Index i = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -yi(t) * grad(t) > gmax) {
        gmax = -yi(t) * grad(t);
        i = t;
      }
    }
    if (i < 0) {
      converged = true;
      break;
    }
    Eigen::VectorXd const Ki = K.row(i);

    Eigen::Index j = -1;
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) { continue; }
      double const v = -yi(t) * grad(t);
      gmin = std::min(gmin, v);
      double const b = gmax - v;
      if (b > 0) {
        double a = K.diag(i) + K.diag(t) - 2.0 * Ki(t);
        if (a <= 0) { a = tau; }
        double const obj = -(b * b) / a;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    if (gmax - gmin < spec.tolerance || j < 0) {
      converged = true;
      break;
    }
    Eigen::VectorXd const Kj = K.row(j);

    double const old_ai = alpha(i);
    double const old_aj = alpha(j);
    double const Qij = yi(i) * yi(j) * Ki(j);
    if (yi(i) != yi(j)) {
      double quad = K.diag(i) + K.diag(j) + 2.0 * Qij;
      if (quad <= 0) { quad = tau; }
      double const delta = (-grad(i) - grad(j)) / quad;
      double const diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = -diff; }
      }
      if (diff > 0) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = C - diff; }
      } else {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = C + diff; }
      }
    } else {
      double quad = K.diag(i) + K.diag(j) - 2.0 * Qij;
      if (quad <= 0) { quad = tau; }
      double const delta = (grad(i) - grad(j)) / quad;
      double const sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = sum - C; }
      } else {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = sum; }
      }
      if (sum > C) {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = sum - C; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = sum; }
      }
    }

    double const dai = alpha(i) - old_ai;
    double const daj = alpha(j) - old_aj;
    for (Eigen::Index t = 0; t < n; ++t) {
      grad(t) += yi(t) * (yi(i) * Ki(t) * dai + yi(j) * Kj(t) * daj);
    }
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    double const yg = yi(t) * grad(t);
    if (alpha(t) >= C) {
      if (yi(t) < 0) { ub = std::min(ub, yg); } else { lb = std::max(lb, yg); }
    } else if (alpha(t) <= 0) {
      if (yi(t) > 0) { ub = std::min(ub, yg); } else { lb = std::max(lb, yg); }
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double const rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

  out.bias = -rho;
  out.iterations = iter;
  out.converged = converged;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha(t) > 0) { sv.push_back(t); }
  }
  out.support.resize(static_cast<Eigen::Index>(sv.size()), rows.cols());
  out.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    out.support.row(static_cast<Eigen::Index>(s)) = rows.row(sv[s]);
    out.coef(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * yi(sv[s]);
    out.support_index.push_back(static_cast<int>(sv[s]));
  }
  return out;
}

double kkt_residual(BinarySvm const &machine, Eigen::Ref<RowMatrix const> const &rows, std::span<int const> y,
                    double box)
{
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(rows.rows());
  for (std::size_t s = 0; s < machine.support_index.size(); ++s) {
    alpha(machine.support_index[s]) = std::abs(machine.coef(static_cast<Eigen::Index>(s)));
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double const margin = y[static_cast<std::size_t>(i)] * machine.decision(rows.row(i));
    double r = 0.0;
    if (alpha(i) <= 0.0) {
      r = std::max(0.0, 1.0 - margin);
    } else if (alpha(i) >= box) {
      r = std::max(0.0, margin - 1.0);
    } else {
      r = std::abs(margin - 1.0);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

} // namespace har

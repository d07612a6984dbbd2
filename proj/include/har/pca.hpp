#pragma once

#include "har/skeleton.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <fmt/format.h>

namespace har {

// Principal component analysis by eigendecomposition of the sample
// covariance (n-1 normalizer). Data are centered, not standardized.
template <typename Scalar> struct PcaModel
{
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Vector mean;
  Matrix components;  // one unit vector per row, descending eigenvalue
  Vector eigenvalues; // non-increasing, clamped at zero
  Eigen::Index retained_k = 0;
  Scalar variance_threshold = Scalar(0.95);

  Eigen::Index input_dimension() const noexcept { return mean.size(); }

  /// Cumulative explained-variance ratio after i+1 components.
  Vector explained_ratio() const
  {
    Vector cum(eigenvalues.size());
    Scalar run(0);
    Scalar const total = eigenvalues.sum();
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
      run += eigenvalues(i);
      cum(i) = run / total;
    }
    return cum;
  }
};

/// Smallest k whose cumulative ratio reaches the threshold.
template <typename Scalar>
Eigen::Index retained_components(Eigen::Matrix<Scalar, Eigen::Dynamic, 1> const &eigenvalues, Scalar threshold)
{
  Scalar const total = eigenvalues.sum();
  Scalar run(0);
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    run += eigenvalues(i);
    if (run / total >= threshold) { return i + 1; }
  }
  return eigenvalues.size();
}

template <typename Derived>
PcaModel<typename Derived::Scalar> pca_fit(Eigen::MatrixBase<Derived> const &rows, typename Derived::Scalar variance_threshold)
{
  using Scalar = typename Derived::Scalar;
  using Model = PcaModel<Scalar>;
  using Square = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  if (rows.rows() < 2) { throw Error("PCA needs at least 2 rows"); }
  if (rows.cols() < 1) { throw Error("PCA needs at least 1 column"); }
  if (!(variance_threshold > Scalar(0) && variance_threshold <= Scalar(1))) {
    throw Error(fmt::format("variance threshold {} outside (0, 1]", static_cast<double>(variance_threshold)));
  }

  Model m;
  m.variance_threshold = variance_threshold;
  m.mean = rows.colwise().mean().transpose();
  Square const centered = rows.rowwise() - m.mean.transpose();
  Square const cov = (centered.adjoint() * centered) / Scalar(rows.rows() - 1);
  if (!(cov.trace() > Scalar(0))) { throw Error("no variance to explain"); }

  Eigen::SelfAdjointEigenSolver<Square> eig(cov);
  if (eig.info() != Eigen::Success) { throw Error("covariance eigendecomposition failed"); }

  Eigen::Index const d = cov.rows();
  m.eigenvalues.resize(d);
  m.components.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::Index const src = d - 1 - i;  // solver returns ascending order
    m.eigenvalues(i) = std::max(Scalar(0), eig.eigenvalues()(src));
    auto v = eig.eigenvectors().col(src).eval();
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < Scalar(0)) { v = -v; }
    m.components.row(i) = v.transpose();
  }
  m.retained_k = retained_components<Scalar>(m.eigenvalues, variance_threshold);
  return m;
}

/// Scores on the first `k` components (default: retained_k).
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
pca_transform(PcaModel<Scalar> const &model, Eigen::MatrixBase<Derived> const &rows, Eigen::Index k = -1)
{
  if (rows.cols() != model.input_dimension()) {
    throw Error(fmt::format("PCA expects {} columns, got {}", model.input_dimension(), rows.cols()));
  }
  if (k < 0) { k = model.retained_k; }
  if (k > model.components.rows()) { throw Error("requested more components than the model holds"); }
  return (rows.rowwise() - model.mean.transpose()) * model.components.topRows(k).transpose();
}

/// Maps scores back into feature space; exact for k = full dimension.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
pca_reconstruct(PcaModel<Scalar> const &model, Eigen::MatrixBase<Derived> const &scores)
{
  auto const k = scores.cols();
  return (scores * model.components.topRows(k)).rowwise() + model.mean.transpose();
}

} // namespace har

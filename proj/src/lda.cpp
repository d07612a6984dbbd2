#include "har/classifiers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace har {

LdaModel fit_lda(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count)
{
  auto const n = rows.rows();
  auto const d = rows.cols();
  auto const K = static_cast<Eigen::Index>(class_count);
  if (n <= K) { throw Error("LDA needs more rows than classes"); }

  LdaModel m;
  m.means = RowMatrix::Zero(K, d);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto const c = targets[static_cast<std::size_t>(i)];
    m.means.row(c) += rows.row(i);
    counts(c) += 1.0;
  }
  for (Eigen::Index c = 0; c < K; ++c) { m.means.row(c) /= counts(c); }

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd const r = rows.row(i) - m.means.row(targets[static_cast<std::size_t>(i)]);
    pooled.selfadjointView<Eigen::Lower>().rankUpdate(r.transpose());
  }
  pooled = pooled.selfadjointView<Eigen::Lower>();
  pooled /= static_cast<double>(n - K);

  double const trace = pooled.trace();
  if (!(trace > 0.0)) { throw Error("singular pooled covariance: features carry no within-class variance"); }

  // Treat the covariance as singular when its condition number exceeds 1e12.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pooled, Eigen::EigenvaluesOnly);
  double const lo = eig.eigenvalues().minCoeff();
  double const hi = eig.eigenvalues().maxCoeff();
  if (!(lo > hi * 1e-12)) {
    pooled.diagonal().array() += 1e-6 * trace / static_cast<double>(d);
    m.regularized = true;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(pooled);
  if (llt.info() != Eigen::Success) {
    throw Error("singular pooled covariance; add regularization or more data");
  }

  m.weights = llt.solve(m.means.transpose()).transpose();
  m.intercepts.resize(K);
  for (Eigen::Index c = 0; c < K; ++c) {
    m.intercepts(c) = -0.5 * m.means.row(c).dot(m.weights.row(c)) + std::log(counts(c) / static_cast<double>(n));
  }
  return m;
}

} // namespace har

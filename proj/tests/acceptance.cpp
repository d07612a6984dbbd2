// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include "har/classifiers.hpp"
#include "har/dataset.hpp"
#include "har/daefe.hpp"
#include "har/eval.hpp"
#include "har/pca.hpp"
#include "har/random.hpp"

#include "oracles.hpp"

#include <Eigen/Geometry>
#include <fmt/format.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace har;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  bool pass = true;
  std::string detail;

  void require(bool ok, std::string const &what)
  {
    pass = pass && ok;
    if (!detail.empty()) { detail += "; "; }
    detail += what;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

oracle::Mat to_rows(RowMatrix const &m)
{
  oracle::Mat out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) { out[static_cast<std::size_t>(i)].push_back(m(i, j)); }
  }
  return out;
}

// ---------------------------------------------------------------- criteria

Outcome similarity_invariance()
{
  auto const t0 = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    JointPositions j;
    for (int r = 0; r < kJointCount; ++r) {
      for (int c = 0; c < 3; ++c) { j(r, c) = rng.uniform(-1.0, 1.0); }
    }
    Eigen::RowVector3d const t(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    double const s = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    JointPositions const moved = (s * j).rowwise() + t;
    auto const a = normalize_posture(j, JointSubset::c28(), Dims::Three, Modality::Coordinates);
    auto const b = normalize_posture(moved, JointSubset::c28(), Dims::Three, Modality::Coordinates);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  // Non-invariance witness: a fixed upright skeleton turned a quarter turn
  // about the vertical axis.
  auto const upright = synthetic_template(SynthSpec{}, 1, 2, 0);
  Eigen::Matrix3d const r = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitY()).toRotationMatrix();
  JointPositions const turned = upright * r.transpose();
  double const witness = (normalize_posture(upright, JointSubset::c28(), Dims::Three, Modality::Coordinates) -
                          normalize_posture(turned, JointSubset::c28(), Dims::Three, Modality::Coordinates))
                           .cwiseAbs()
                           .maxCoeff();
  double const elapsed = seconds_since(t0);
  Outcome o;
  o.require(worst <= 1e-9, fmt::format("max |diff| {:.2e} <= 1e-9 over 1000 frames", worst));
  o.require(witness > 1e-3, fmt::format("rotation witness {:.3f} > 1e-3", witness));
  o.require(elapsed < 5.0, fmt::format("{:.2f} s < 5 s", elapsed));
  return o;
}

Outcome frame_and_dimension_laws()
{
  SynthSpec spec;
  spec.n_participants = 16;
  spec.frames_per_sequence = 60;
  auto const manifest = generate_synthetic(spec);
  Outcome o;
  std::array<std::pair<Modality, Eigen::Index>, 3> const rows = {
    {{Modality::Coordinates, 7344}, {Modality::Velocity, 7200}, {Modality::Acceleration, 7056}}};
  std::string counts;
  for (auto const &[m, expect] : rows) {
    auto const fm = build_feature_matrix(manifest, {m, JointSubset::c28(), Dims::Three}, true);
    o.pass = o.pass && fm.size() == expect;
    counts += fmt::format("{}{}", counts.empty() ? "" : "/", fm.size());
  }
  o.require(o.pass, fmt::format("rows {} (expect 7344/7200/7056)", counts));

  struct Dim
  {
    char const *name;
    JointSubset subset;
    Eigen::Index three, two;
  };
  std::string dims;
  bool dims_ok = true;
  for (auto const &d : {Dim{"C9", JointSubset::c9(), 24, 16}, Dim{"C18", JointSubset::c18(), 51, 34},
                        Dim{"C28", JointSubset::c28(), 81, 54}}) {
    auto const a = build_feature_matrix(manifest, {Modality::Coordinates, d.subset, Dims::Three}, false).dimension();
    auto const b = build_feature_matrix(manifest, {Modality::Coordinates, d.subset, Dims::Two}, false).dimension();
    dims_ok = dims_ok && a == d.three && b == d.two;
    dims += fmt::format(" {}:{}/{}", d.name, a, b);
  }
  o.require(dims_ok, "dims" + dims);
  return o;
}

Outcome pca_oracle()
{
  Rng rng(303);
  double worst_eig = 0.0, worst_trace = 0.0;
  int k_mismatch = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto const n = static_cast<Eigen::Index>(20 + rng.below(181));
    auto const d = static_cast<Eigen::Index>(1 + rng.below(10));
    RowMatrix z(n, d), mix(d, d);
    for (Eigen::Index i = 0; i < z.size(); ++i) { z.data()[i] = rng.normal(); }
    for (Eigen::Index i = 0; i < mix.size(); ++i) { mix.data()[i] = rng.uniform(-1.0, 1.0); }
    RowMatrix const rows = z * mix;
    double const threshold = rng.uniform(0.5, 1.0);
    auto const model = pca_fit(rows, threshold);
    auto const cov = oracle::covariance(to_rows(rows));
    auto const ref = oracle::jacobi(cov);
    double trace = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      worst_eig = std::max(worst_eig, std::abs(model.eigenvalues(i) - ref.values[static_cast<std::size_t>(i)]));
      trace += cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    worst_trace = std::max(worst_trace, std::abs(model.eigenvalues.sum() - trace));
    k_mismatch += static_cast<std::size_t>(model.retained_k) != oracle::retained(ref.values, threshold);
  }
  Outcome o;
  o.require(worst_eig <= 1e-8, fmt::format("max eigenvalue error {:.2e} <= 1e-8", worst_eig));
  o.require(k_mismatch == 0, fmt::format("retained_k mismatches {}/20", k_mismatch));
  o.require(worst_trace <= 1e-8, fmt::format("total-variance error {:.2e} <= 1e-8", worst_trace));
  return o;
}

Outcome knn_oracle()
{
  Rng rng(404);
  std::size_t queries = 0, agree = 0, tied = 0;
  for (int set = 0; set < 50; ++set) {
    auto const n = static_cast<Eigen::Index>(2 + rng.below(199));
    auto const d = static_cast<Eigen::Index>(1 + rng.below(6));
    int const k = 1 + static_cast<int>(rng.below(9));
    bool const grid = set % 2 == 0;  // integer lattice: many equal distances
    RowMatrix x(n, d);
    std::vector<int> y;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) { x(i, j) = grid ? static_cast<double>(rng.below(3)) : rng.normal(); }
      y.push_back(1 + static_cast<int>(rng.below(9)));
    }
    if (set % 5 == 1) {
      // Exact duplicate rows carrying different labels.
      for (Eigen::Index i = 1; i < n; i += 3) { x.row(i) = x.row(i - 1); }
    }
    if (std::set<int>(y.begin(), y.end()).size() < 2) { y[0] = y[0] == 1 ? 2 : 1; }
    auto const model = train(ClassifierSpec{FineKnnSpec{k}, 0}, x, y);
    RowMatrix q(40, d);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      if (i % 4 == 0) {
        q.row(i) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
      } else {
        for (Eigen::Index j = 0; j < d; ++j) { q(i, j) = grid ? 0.5 * static_cast<double>(rng.below(5)) : rng.normal(); }
      }
    }
    // Midpoint between two training rows of different labels: equal distances.
    if (n >= 2) { q.row(0) = 0.5 * (x.row(0) + x.row(1)); }
    auto const pred = predict(model, q);
    auto const rows = to_rows(x);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      std::vector<double> query(q.row(i).data(), q.row(i).data() + d);
      // count queries whose k-th and (k+1)-th neighbors are equidistant
      std::vector<double> dist;
      for (auto const &r : rows) {
        double s = 0.0;
        for (std::size_t c = 0; c < query.size(); ++c) { s += (r[c] - query[c]) * (r[c] - query[c]); }
        dist.push_back(s);
      }
      std::sort(dist.begin(), dist.end());
      if (static_cast<std::size_t>(k) < dist.size() && dist[static_cast<std::size_t>(k) - 1] == dist[static_cast<std::size_t>(k)]) { ++tied; }
      ++queries;
      agree += pred[static_cast<std::size_t>(i)] == oracle::knn(rows, y, query, k);
    }
  }
  Outcome o;
  o.require(agree == queries, fmt::format("{}/{} queries match the exhaustive scan", agree, queries));
  o.require(tied > 0, fmt::format("{} queries with a distance tie at the k-th neighbor", tied));
  return o;
}

Outcome mlp_gradient()
{
  Rng rng(505);
  MlpShape const shape{81, 175, 9};
  double worst = 0.0;
  int coordinates = 0;
  for (int batch = 0; batch < 5; ++batch) {
    RowMatrix x(32, shape.inputs);
    for (Eigen::Index i = 0; i < x.size(); ++i) { x.data()[i] = rng.normal(); }
    std::vector<int> t;
    for (int i = 0; i < 32; ++i) { t.push_back(static_cast<int>(rng.below(9))); }
    Eigen::VectorXd w = mlp_initial_weights(shape, derive_seed(505, static_cast<std::uint64_t>(batch)));
    for (Eigen::Index i = 0; i < w.size(); ++i) { w(i) += 0.05 * rng.normal(); }
    auto const analytic = mlp_loss_and_gradient(shape, w, x, t);
    for (int s = 0; s < 12; ++s, ++coordinates) {
      auto const i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.size())));
      Eigen::VectorXd plus = w, minus = w;
      plus(i) += 1e-5;
      minus(i) -= 1e-5;
      double const fd =
        (mlp_loss_and_gradient(shape, plus, x, t).loss - mlp_loss_and_gradient(shape, minus, x, t).loss) / 2e-5;
      worst = std::max(worst, oracle::relative_error(analytic.gradient(i), fd));
    }
  }
  Outcome o;
  o.require(worst <= 1e-4, fmt::format("max relative error {:.2e} <= 1e-4 over {} coordinates in 5 batches", worst,
                                       coordinates));
  return o;
}

Outcome svm_separable()
{
  auto const t0 = Clock::now();
  Rng rng(606);
  int const per = 100;
  RowMatrix x(2 * per, 2);
  std::vector<int> y;
  for (int i = 0; i < 2 * per; ++i) {
    int const c = i < per ? 1 : 2;
    // Blobs on either side of the line x0 = 0, each clipped 0.5 away from it.
    double const side = c == 1 ? -1.0 : 1.0;
    x(i, 0) = side * (0.5 + std::abs(rng.normal(1.5, 0.6)));
    x(i, 1) = rng.normal(0.0, 1.0);
    y.push_back(c);
  }
  auto const model = train(ClassifierSpec{CubicSvmSpec{}, 0}, x, y);
  auto const pred = predict(model, x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) { hit += pred[i] == y[i]; }

  // KKT residuals recomputed from the duals with an independent kernel.
  auto const &svm = std::get<SvmModel>(model.params);
  auto const &m = svm.machines.at(0);
  RowMatrix const z = (x.rowwise() - svm.center).array().rowwise() / svm.scale.array();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(z.rows());
  for (std::size_t s = 0; s < m.support_index.size(); ++s) {
    alpha(m.support_index[s]) = std::abs(m.coef(static_cast<Eigen::Index>(s)));
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double f = m.bias;
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      if (alpha(j) <= 0) { continue; }
      double dot = 0.0;
      for (Eigen::Index c = 0; c < z.cols(); ++c) { dot += z(i, c) * z(j, c); }
      f += alpha(j) * (y[static_cast<std::size_t>(j)] == 1 ? 1.0 : -1.0) * (1 + dot) * (1 + dot) * (1 + dot);
    }
    double const margin = (y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0) * f;
    double const r = alpha(i) <= 0 ? std::max(0.0, 1.0 - margin)
                     : alpha(i) >= 1.0 ? std::max(0.0, margin - 1.0)
                                       : std::abs(margin - 1.0);
    worst = std::max(worst, r);
  }
  double const elapsed = seconds_since(t0);
  Outcome o;
  o.require(hit == y.size(), fmt::format("training accuracy {}/{}", hit, y.size()));
  o.require(worst <= 1e-3, fmt::format("max KKT residual {:.2e} <= 1e-3", worst));
  o.require(elapsed < 10.0, fmt::format("{:.2f} s < 10 s", elapsed));
  return o;
}

Outcome synthetic_benchmark()
{
  auto const t0 = Clock::now();
  auto const manifest = generate_synthetic(SynthSpec{});
  auto cv = [&](Modality m, ClassifierSpec const &spec) {
    auto const fm = build_feature_matrix(manifest, {m, JointSubset::c28(), Dims::Three}, true);
    return cross_validate(spec, fm, 5, 42);
  };
  auto const knn_c = cv(Modality::Coordinates, ClassifierSpec{FineKnnSpec{}, 42});
  auto const knn_v = cv(Modality::Velocity, ClassifierSpec{FineKnnSpec{}, 42});
  auto const knn_a = cv(Modality::Acceleration, ClassifierSpec{FineKnnSpec{}, 42});
  auto const tree_c = cv(Modality::Coordinates, ClassifierSpec{FineTreeSpec{}, 42});
  double const elapsed = seconds_since(t0);

  Outcome o;
  o.require(knn_c.overall_accuracy >= 0.90, fmt::format("kNN {:.4f} >= 0.90", knn_c.overall_accuracy));
  o.require(tree_c.overall_accuracy >= 0.90, fmt::format("tree {:.4f} >= 0.90", tree_c.overall_accuracy));
  o.require(knn_c.overall_accuracy > knn_v.overall_accuracy && knn_v.overall_accuracy > knn_a.overall_accuracy,
            fmt::format("kNN coordinates {:.4f} > velocity {:.4f} > acceleration {:.4f}", knn_c.overall_accuracy,
                        knn_v.overall_accuracy, knn_a.overall_accuracy));
  for (auto const &[name, r] : {std::pair{"kNN", &knn_c}, std::pair{"tree", &tree_c}}) {
    o.require(r->stationary_accuracy.value_or(0) >= r->dynamic_accuracy.value_or(1),
              fmt::format("{} stationary {:.4f} >= dynamic {:.4f}", name, r->stationary_accuracy.value_or(0),
                          r->dynamic_accuracy.value_or(1)));
  }
  o.require(elapsed < 60.0, fmt::format("{:.1f} s < 60 s", elapsed));
  return o;
}

Outcome depth_fixture()
{
  SynthSpec spec;
  spec.depth_separated = true;
  auto const manifest = generate_synthetic(spec);
  Outcome o;
  bool dims_ok = true;
  std::string accuracies;
  for (auto const &subset : {JointSubset::c9(), JointSubset::c18(), JointSubset::c28()}) {
    double acc[2] = {0, 0};
    for (int i = 0; i < 2; ++i) {
      Dims const d = i == 0 ? Dims::Three : Dims::Two;
      auto const fm = build_feature_matrix(manifest, {Modality::Coordinates, subset, d}, true);
      acc[i] = cross_validate(ClassifierSpec{FineKnnSpec{}, 42}, fm, 5, 42).overall_accuracy;
      auto const pca = pca_fit(fm.rows, 0.95);
      dims_ok = dims_ok && pca.retained_k <= fm.dimension() && pca_transform(pca, fm.rows).cols() <= fm.dimension();
    }
    o.pass = o.pass && acc[0] >= acc[1];
    accuracies += fmt::format(" {} 3D {:.4f} >= 2D {:.4f};", subset.name(), acc[0], acc[1]);
  }
  o.require(o.pass, "kNN" + accuracies.substr(0, accuracies.size() - 1));
  o.require(dims_ok, "PCA(0.95) dimension never exceeds the input dimension");
  return o;
}

std::string slurp(fs::path const &p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int shell(std::string const &cmd)
{
  int const status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome bundle_determinism()
{
  auto const dir = fs::temp_directory_path() / fmt::format("har-acceptance-{}", ::getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto const data = dir / "data.csv";
  Outcome o;
  int rc = shell(fmt::format("'{}' synth -o '{}' >/dev/null", HAR_CLI_PATH, data.string()));
  for (char const *run : {"a", "b"}) {
    rc |= shell(fmt::format("'{}' evaluate '{}' --classifier bagged --trees 5 --pca on --seed 7 --save-model -o '{}' >/dev/null",
                            HAR_CLI_PATH, data.string(), (dir / run).string()));
  }
  o.require(rc == 0, "CLI runs succeeded");
  std::size_t files = 0, identical = 0;
  for (auto const &entry : fs::directory_iterator(dir / "a")) {
    ++files;
    auto const other = dir / "b" / entry.path().filename();
    identical += fs::exists(other) && slurp(entry.path()) == slurp(other);
  }
  std::size_t other_files = 0;
  for ([[maybe_unused]] auto const &entry : fs::directory_iterator(dir / "b")) { ++other_files; }
  o.require(files > 0 && identical == files && other_files == files,
            fmt::format("{}/{} bundle files byte-identical", identical, files));
  fs::remove_all(dir);
  return o;
}

Outcome report_integrity()
{
  std::vector<int> truth, pred;
  for (int t = 0; t < 9; ++t) {
    for (int p = 0; p < 9; ++p) {
      for (int n = 0; n < oracle::kReferenceDnnConfusion[t][p]; ++n) {
        truth.push_back(t + 1);
        pred.push_back(p + 1);
      }
    }
  }
  auto const r = compute_report(truth, pred);
  double const pct = 100.0 * r.overall_accuracy;
  Outcome o;
  o.require(std::abs(pct - 96.8) <= 0.1, fmt::format("overall accuracy {:.3f}% = {}/{} within 96.8 +/- 0.1", pct,
                                                     r.confusion.trace(), r.total()));
  return o;
}

} // namespace

int main()
{
  struct Criterion
  {
    char const *name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> const criteria = {
    {"similarity invariance", similarity_invariance},
    {"frame and dimension laws", frame_and_dimension_laws},
    {"PCA oracle", pca_oracle},
    {"k-NN oracle", knn_oracle},
    {"MLP gradient check", mlp_gradient},
    {"SVM separable fixture", svm_separable},
    {"synthetic benchmark", synthetic_benchmark},
    {"depth-separated fixture", depth_fixture},
    {"bundle determinism", bundle_determinism},
    {"report integrity", report_integrity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (std::exception const &e) {
      o.pass = false;
      o.detail = fmt::format("exception: {}", e.what());
    }
    failed += !o.pass;
    std::cout << fmt::format("[{}] {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail)
              << std::flush;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}

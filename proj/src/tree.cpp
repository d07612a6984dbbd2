#include "har/classifiers.hpp"
#include "har/random.hpp"

#include <algorithm>
#include <queue>

namespace har {

int DecisionTree::leaf_of(Eigen::Ref<Eigen::RowVectorXd const> const &x) const
{
  int n = 0;
  while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
    auto const &node = nodes[static_cast<std::size_t>(n)];
    n = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return n;
}

int DecisionTree::split_count() const
{
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](TreeNode const &n) { return !n.is_leaf(); }));
}

int DecisionTree::depth() const
{
  if (nodes.empty()) { return 0; }
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto const &n = nodes[i];
    if (n.is_leaf()) { continue; }
    level[static_cast<std::size_t>(n.left)] = level[static_cast<std::size_t>(n.right)] = level[i] + 1;
    deepest = std::max(deepest, level[i] + 1);
  }
  return deepest;
}

namespace {

// n * Gini(counts) = n - sum(c^2) / n
double weighted_gini(double n, double sum_sq) { return n > 0.0 ? n - sum_sq / n : 0.0; }

struct Split
{
  bool found = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct Pending
{
  double gain;
  int node;
  Split split;
};

struct PendingOrder
{
  // Largest gain first; earlier node on equal gain.
  bool operator()(Pending const &a, Pending const &b) const
  {
    if (a.gain != b.gain) { return a.gain < b.gain; }
    return a.node > b.node;
  }
};

Split best_split(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, std::vector<int> const &index,
                 std::vector<int> const &counts)
{
  Split best;
  std::size_t const n = index.size();
  if (n < 2) { return best; }
  if (std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) < 2) { return best; }

  double parent_sq = 0.0;
  for (int c : counts) { parent_sq += double(c) * c; }
  double const parent = weighted_gini(double(n), parent_sq);

  std::vector<std::pair<double, int>> column(n);
  std::vector<int> left(counts.size());
  for (Eigen::Index f = 0; f < rows.cols(); ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = {rows(index[i], f), targets[static_cast<std::size_t>(index[i])]};
    }
    std::sort(column.begin(), column.end());
    if (column.front().first == column.back().first) { continue; }

    std::fill(left.begin(), left.end(), 0);
    double left_sq = 0.0;
    double right_sq = parent_sq;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      auto const c = static_cast<std::size_t>(column[i].second);
      double const lc = left[c];
      double const rc = counts[c] - lc;
      left_sq += 2.0 * lc + 1.0;   // (lc+1)^2 - lc^2
      right_sq -= 2.0 * rc - 1.0;  // rc^2 - (rc-1)^2
      left[c] += 1;
      if (column[i].first == column[i + 1].first) { continue; }
      double const nl = double(i + 1);
      double const gain = parent - weighted_gini(nl, left_sq) - weighted_gini(double(n) - nl, right_sq);
      if (gain > best.gain + 1e-12) {
        double const a = column[i].first;
        double const b = column[i + 1].first;
        double threshold = a + (b - a) / 2.0;
        if (!(threshold < b)) { threshold = a; }
        best = {true, gain, static_cast<int>(f), threshold};
      }
    }
  }
  return best;
}

std::vector<int> class_counts(std::span<int const> targets, std::vector<int> const &index, int class_count)
{
  std::vector<int> out(static_cast<std::size_t>(class_count), 0);
  for (int i : index) { ++out[static_cast<std::size_t>(targets[static_cast<std::size_t>(i)])]; }
  return out;
}

int majority(std::vector<int> const &counts)
{
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

} // namespace

DecisionTree grow_tree(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                       int max_splits)
{
  if (rows.rows() == 0) { throw Error("cannot grow a tree on zero rows"); }
  DecisionTree tree;
  std::vector<std::vector<int>> members;

  auto add_node = [&](std::vector<int> index) {
    TreeNode node;
    node.class_counts = class_counts(targets, index, class_count);
    node.leaf_class = majority(node.class_counts);
    tree.nodes.push_back(std::move(node));
    members.push_back(std::move(index));
    return static_cast<int>(tree.nodes.size() - 1);
  };

  std::vector<int> all(static_cast<std::size_t>(rows.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) { all[i] = static_cast<int>(i); }
  add_node(std::move(all));

  std::priority_queue<Pending, std::vector<Pending>, PendingOrder> frontier;
  auto consider = [&](int node) {
    auto const s = best_split(rows, targets, members[static_cast<std::size_t>(node)],
                              tree.nodes[static_cast<std::size_t>(node)].class_counts);
    if (s.found) { frontier.push({s.gain, node, s}); }
  };
  consider(0);

  int splits = 0;
  while (splits < max_splits && !frontier.empty()) {
    auto const p = frontier.top();
    frontier.pop();
    std::vector<int> lo, hi;
    for (int i : members[static_cast<std::size_t>(p.node)]) {
      (rows(i, p.split.feature) <= p.split.threshold ? lo : hi).push_back(i);
    }
    members[static_cast<std::size_t>(p.node)].clear();
    int const l = add_node(std::move(lo));
    int const r = add_node(std::move(hi));
    auto &node = tree.nodes[static_cast<std::size_t>(p.node)];
    node.feature = p.split.feature;
    node.threshold = p.split.threshold;
    node.left = l;
    node.right = r;
    ++splits;
    consider(l);
    consider(r);
  }
  return tree;
}

BaggedModel grow_bagged(Eigen::Ref<RowMatrix const> const &rows, std::span<int const> targets, int class_count,
                        BaggedTreesSpec const &spec, std::uint64_t seed, Bootstrap bootstrap)
{
  BaggedModel model;
  auto const n = static_cast<std::size_t>(rows.rows());
  for (int b = 0; b < spec.n_trees; ++b) {
    std::vector<std::size_t> pick(n);
    if (bootstrap == Bootstrap::Identity) {
      for (std::size_t i = 0; i < n; ++i) { pick[i] = i; }
    } else {
      Rng rng(derive_seed(seed, 0x6261676bULL, static_cast<std::uint64_t>(b)));
      for (auto &p : pick) { p = static_cast<std::size_t>(rng.below(n)); }
    }
    RowMatrix sample(static_cast<Eigen::Index>(n), rows.cols());
    std::vector<int> sample_targets(n);
    for (std::size_t i = 0; i < n; ++i) {
      sample.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(pick[i]));
      sample_targets[i] = targets[pick[i]];
    }
    model.trees.push_back(grow_tree(sample, sample_targets, class_count, spec.max_splits));
  }
  return model;
}

} // namespace har

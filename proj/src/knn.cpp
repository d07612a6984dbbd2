#include "har/classifiers.hpp"

#include <algorithm>
#include <tuple>

namespace har {

std::vector<int> knn_neighbors(KnnModel const &model, Eigen::Ref<Eigen::RowVectorXd const> const &query)
{
  auto const n = model.samples.rows();
  auto const k = static_cast<std::size_t>(std::min<Eigen::Index>(model.k, n));
  Eigen::VectorXd const dist = (model.samples.rowwise() - query).rowwise().squaredNorm();

  using Key = std::tuple<double, int, int>;
  std::vector<Key> keys(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    keys[static_cast<std::size_t>(i)] = {dist(i), model.targets[static_cast<std::size_t>(i)], static_cast<int>(i)};
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end());

  std::vector<int> out(k);
  for (std::size_t i = 0; i < k; ++i) { out[i] = std::get<2>(keys[i]); }
  return out;
}

} // namespace har

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace principles {

template <typename Scalar>
struct Neighbor {
  Eigen::Index index;
  Scalar distance;
};

/// Exact k nearest columns of `points` to `query` under unnormalized L2.
/// Ties are broken by column index, so earlier insertions win.
template <typename DerivedPoints, typename DerivedQuery>
std::vector<Neighbor<typename DerivedPoints::Scalar>> knn_l2(const Eigen::MatrixBase<DerivedPoints>& points,
                                                             const Eigen::MatrixBase<DerivedQuery>& query,
                                                             Eigen::Index k) {
  using Scalar = typename DerivedPoints::Scalar;
  eigen_assert(query.cols() == 1 && query.rows() == points.rows());
  const Eigen::Index n = points.cols();
  const Eigen::Index take = std::min(k, n);
  if (take <= 0) return {};

  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> squared = (points.colwise() - query.col(0)).colwise().squaredNorm();

  std::vector<Neighbor<Scalar>> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = {i, squared[i]};
  auto closer = [](const Neighbor<Scalar>& a, const Neighbor<Scalar>& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  std::partial_sort(all.begin(), all.begin() + take, all.end(), closer);
  all.resize(static_cast<std::size_t>(take));
  for (auto& nb : all) nb.distance = std::sqrt(nb.distance);
  return all;
}

}  // namespace principles

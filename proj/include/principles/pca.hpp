#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace principles {

template <typename Scalar>
struct PcaResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector mean;
  Vector eigenvalues;   // every eigenvalue of the population covariance, descending
  Matrix components;    // d x axes, unit columns
  Matrix projected;     // n x dims; columns past `axes` are zero
  Eigen::Index axes = 0;
  Eigen::Index rank = 0;
  Scalar reconstruction_error = 0;  // mean squared residual per observation

  bool rank_deficient(Eigen::Index dims) const { return axes < dims; }
};

/// PCA of row observations. Axes follow descending eigenvalue order and each
/// axis is signed so its first non-negligible loading is positive.
template <typename Derived>
PcaResult<typename Derived::Scalar> pca(const Eigen::MatrixBase<Derived>& observations, Eigen::Index dims,
                                        typename Derived::Scalar tolerance = 1e-10) {
  using Scalar = typename Derived::Scalar;
  using Result = PcaResult<Scalar>;
  using Matrix = typename Result::Matrix;

  const Eigen::Index n = observations.rows();
  const Eigen::Index d = observations.cols();
  PcaResult<Scalar> r;
  r.mean = observations.colwise().mean().transpose();
  Matrix centered = observations.rowwise() - r.mean.transpose();
  Matrix cov = (centered.adjoint() * centered) / static_cast<Scalar>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  r.eigenvalues = solver.eigenvalues().reverse();
  Matrix vectors = solver.eigenvectors().rowwise().reverse();

  const Scalar scale = std::max<Scalar>(Scalar(1), std::abs(r.eigenvalues(0)));
  r.rank = (r.eigenvalues.array() > tolerance * scale).count();
  r.axes = std::min({dims, r.rank, d});
  r.components = vectors.leftCols(r.axes);
  for (Eigen::Index j = 0; j < r.axes; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(r.components(i, j)) > Scalar(1e-12)) {
        if (r.components(i, j) < 0) r.components.col(j) *= Scalar(-1);
        break;
      }
    }
  }

  r.projected = Matrix::Zero(n, dims);
  r.projected.leftCols(r.axes) = centered * r.components;
  Matrix residual = centered - r.projected.leftCols(r.axes) * r.components.transpose();
  r.reconstruction_error = residual.squaredNorm() / static_cast<Scalar>(n);
  return r;
}

}  // namespace principles

#include "zslforge/pca.hpp"

#include <Eigen/Eigenvalues>

#include "zslforge/errors.hpp"

namespace zslforge {

Matd pca_project_2d(const Matd& x) {
  if (x.rows() < 2) throw InvalidArgument("pca: need at least two rows");
  if (x.cols() < 2) throw InvalidArgument("pca: need at least two columns");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matd centered = x.rowwise() - mean;
  const Matd cov =
      centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw Error("pca: eigendecomposition failed");
  // Eigenvalues come back ascending; the last two columns span the top-2
  // subspace, ordered largest first.
  Matd axes(x.cols(), 2);
  axes.col(0) = solver.eigenvectors().col(x.cols() - 1);
  axes.col(1) = solver.eigenvectors().col(x.cols() - 2);
  for (int j = 0; j < 2; ++j) {
    Eigen::Index imax = 0;
    axes.col(j).cwiseAbs().maxCoeff(&imax);
    if (axes(imax, j) < 0) axes.col(j) = -axes.col(j);
  }
  return centered * axes;
}

}  // namespace zslforge

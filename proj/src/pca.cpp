#include "tnet/pca.hpp"

#include "tnet/errors.hpp"
#include "tnet/linalg.hpp"

namespace tnet {

PcaProjector pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& data, int k) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (k < 1 || k > d) throw ContractViolation("pca_fit: need 1 <= k <= D");
  if (n <= k) throw ContractViolation("pca_fit: need more samples than components");
  if (!data.allFinite()) throw ContractViolation("pca_fit: non-finite data");

  PcaProjector p;
  p.mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - p.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  const SymEigResult eig = sym_eig(cov);
  p.components = eig.eigenvectors.leftCols(k);
  p.explained_variance = eig.eigenvalues.head(k);
  return p;
}

Eigen::MatrixXd pca_project(const PcaProjector& p,
                            const Eigen::Ref<const Eigen::MatrixXd>& data) {
  if (data.cols() != p.mean.size()) {
    throw ContractViolation("pca_project: dimension mismatch");
  }
  return (data.rowwise() - p.mean.transpose()) * p.components;
}

}  // namespace tnet

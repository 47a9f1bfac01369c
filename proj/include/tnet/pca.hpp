#pragma once

#include <Eigen/Core>

namespace tnet {

struct PcaProjector {
  Eigen::VectorXd mean;                // D
  Eigen::MatrixXd components;          // D x k, orthonormal columns
  Eigen::VectorXd explained_variance;  // k, descending
};

// Top-k eigenvectors of the sample covariance (1/(N-1) normalization) of the
// rows of `data`. Requires N > k and k <= D.
PcaProjector pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& data, int k);

// Z = (data - mean) * components, N x k.
Eigen::MatrixXd pca_project(const PcaProjector& p,
                            const Eigen::Ref<const Eigen::MatrixXd>& data);

}  // namespace tnet

#pragma once

#include <Eigen/Core>
#include <vector>

namespace tnet {

struct SymEigResult {
  Eigen::VectorXd eigenvalues;   // sorted descending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, aligned with values
};

// Eigendecomposition of a symmetric matrix. Eigenvalues come back in
// descending order and each eigenvector is sign-fixed so that its entry of
// largest magnitude is non-negative, which makes downstream projections
// reproducible. Asymmetric or non-square input throws ContractViolation;
// solver failure throws NumericalError.
SymEigResult sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& a,
                     double sym_tol = 1e-9);

// Lower-triangular L with L * L^T = a. Throws DefinitenessError when a is
// not positive-definite, so callers can regularize and retry.
Eigen::MatrixXd cholesky(const Eigen::Ref<const Eigen::MatrixXd>& a,
                         double sym_tol = 1e-9);

// Solves (L L^T) x = b given the Cholesky factor L.
Eigen::VectorXd cholesky_solve(const Eigen::Ref<const Eigen::MatrixXd>& lower,
                               const Eigen::Ref<const Eigen::VectorXd>& b);

// Empirical percentile with linear interpolation between order statistics,
// pct in [0, 100]. Copies and sorts its input.
double percentile(std::vector<double> values, double pct);

}  // namespace tnet

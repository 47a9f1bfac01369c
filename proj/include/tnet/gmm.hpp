#pragma once

#include <Eigen/Core>
#include <vector>

#include "tnet/rng.hpp"

namespace tnet {

// Full-covariance Gaussian mixture over PCA-projected embeddings.
struct GmmModel {
  Eigen::VectorXd weights;                 // K, positive, sums to 1
  Eigen::MatrixXd means;                   // K x k
  std::vector<Eigen::MatrixXd> covariances;  // K matrices, k x k, SPD
  double reg_eps = 1e-6;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
};

struct GmmFitInfo {
  std::vector<double> loglik_trace;  // mean per-sample log-likelihood
  int iterations = 0;
  int reinit_count = 0;
};

// EM fit with k-means++-style mean seeding and global-covariance init.
// Every M-step adds reg_eps to each covariance diagonal. The mean
// log-likelihood trace is checked non-decreasing (within 1e-8) inside the
// loop. A collapsed component (weight < 1e-8) is re-seeded from the sample
// farthest from the live components in Mahalanobis distance, at most 3
// times, then the fit fails.
GmmModel gmm_fit(const Eigen::Ref<const Eigen::MatrixXd>& z, int K, Rng& rng,
                 double tol = 1e-6, int max_iter = 200, double reg_eps = 1e-6,
                 GmmFitInfo* info = nullptr);

// Responsibilities p(component j | z), computed in log space via Cholesky
// factors; sums to 1.
Eigen::VectorXd gmm_posterior(const GmmModel& g,
                              const Eigen::Ref<const Eigen::VectorXd>& z);

// log sum_j weight_j N(z; mean_j, cov_j) via log-sum-exp.
double gmm_loglik(const GmmModel& g, const Eigen::Ref<const Eigen::VectorXd>& z);

// Row-wise batch variants (N x k input).
Eigen::MatrixXd gmm_posterior_batch(const GmmModel& g,
                                    const Eigen::Ref<const Eigen::MatrixXd>& z);
Eigen::VectorXd gmm_loglik_batch(const GmmModel& g,
                                 const Eigen::Ref<const Eigen::MatrixXd>& z);

}  // namespace tnet

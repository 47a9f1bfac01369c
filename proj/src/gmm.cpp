#include "tnet/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tnet/errors.hpp"
#include "tnet/linalg.hpp"

namespace tnet {

namespace {

constexpr double kCollapseWeight = 1e-8;
constexpr double kMonotonicitySlack = 1e-8;

struct ComponentFactor {
  Eigen::MatrixXd lower;
  double log_norm;  // -k/2 log(2pi) - sum log L_ii
};

ComponentFactor factor_component(const Eigen::MatrixXd& cov, double reg_eps) {
  // The covariance should already be regularized; escalate the ridge only
  // if factorization still fails.
  double extra = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    try {
      ComponentFactor f;
      if (extra == 0.0) {
        f.lower = cholesky(cov);
      } else {
        f.lower = cholesky(
            cov + extra * Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
      }
      f.log_norm = -0.5 * cov.rows() * std::log(2.0 * std::numbers::pi) -
                   f.lower.diagonal().array().log().sum();
      return f;
    } catch (const DefinitenessError&) {
      extra = extra == 0.0 ? 10.0 * reg_eps : extra * 10.0;
    }
  }
  throw NumericalError("gmm: covariance not factorizable");
}

std::vector<ComponentFactor> factor_all(const GmmModel& g) {
  std::vector<ComponentFactor> out;
  out.reserve(static_cast<std::size_t>(g.components()));
  for (const auto& cov : g.covariances) out.push_back(factor_component(cov, g.reg_eps));
  return out;
}

// Per-sample, per-component joint log density log(w_j) + log N(z_i; ...).
Eigen::MatrixXd joint_log_density(const GmmModel& g,
                                  const std::vector<ComponentFactor>& factors,
                                  const Eigen::Ref<const Eigen::MatrixXd>& z) {
  const Eigen::Index n = z.rows();
  const int K = g.components();
  Eigen::MatrixXd out(n, K);
  for (int j = 0; j < K; ++j) {
    const auto& f = factors[static_cast<std::size_t>(j)];
    Eigen::MatrixXd diff = z.rowwise() - g.means.row(j);  // N x k
    Eigen::MatrixXd y =
        f.lower.triangularView<Eigen::Lower>().solve(diff.transpose());
    const Eigen::VectorXd quad = y.colwise().squaredNorm().transpose();
    out.col(j) =
        (-0.5 * quad.array() + f.log_norm + std::log(g.weights[j])).matrix();
  }
  return out;
}

Eigen::VectorXd logsumexp_rows(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  const Eigen::VectorXd sums = (m.colwise() - mx).array().exp().rowwise().sum();
  return (mx.array() + sums.array().log()).matrix();
}

Eigen::MatrixXd global_covariance(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                  double reg_eps) {
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - mean;
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(z.rows());
  cov.diagonal().array() += reg_eps;
  return cov;
}

// k-means++-style seeding: first mean uniform, the rest weighted by squared
// distance to the closest chosen mean.
Eigen::MatrixXd seed_means(const Eigen::Ref<const Eigen::MatrixXd>& z, int K,
                           Rng& rng) {
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd means(K, z.cols());
  means.row(0) = z.row(static_cast<Eigen::Index>(rng.uniform_index(
      static_cast<std::size_t>(n))));
  Eigen::VectorXd d2 =
      (z.rowwise() - means.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < K; ++j) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
    } else {
      double u = rng.next_double() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    means.row(j) = z.row(pick);
    d2 = d2.cwiseMin((z.rowwise() - means.row(j)).rowwise().squaredNorm());
  }
  return means;
}

}  // namespace

GmmModel gmm_fit(const Eigen::Ref<const Eigen::MatrixXd>& z, int K, Rng& rng,
                 double tol, int max_iter, double reg_eps, GmmFitInfo* info) {
  const Eigen::Index n = z.rows();
  if (K < 1) throw ContractViolation("gmm_fit: K must be >= 1");
  if (n < 5 * K) throw ContractViolation("gmm_fit: need at least 5*K samples");
  if (!z.allFinite()) throw ContractViolation("gmm_fit: non-finite data");

  GmmModel g;
  g.reg_eps = reg_eps;
  g.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
  g.means = seed_means(z, K, rng);
  const Eigen::MatrixXd global_cov = global_covariance(z, reg_eps);
  g.covariances.assign(static_cast<std::size_t>(K), global_cov);

  GmmFitInfo local;
  GmmFitInfo& fi = info ? *info : local;
  fi.loglik_trace.clear();
  fi.iterations = 0;
  fi.reinit_count = 0;

  double prev_ll = -std::numeric_limits<double>::infinity();
  bool trace_reset = true;  // no monotonicity constraint across re-seeds

  for (int iter = 0; iter < max_iter; ++iter) {
    const auto factors = factor_all(g);
    const Eigen::MatrixXd joint = joint_log_density(g, factors, z);
    const Eigen::VectorXd per_sample_ll = logsumexp_rows(joint);
    const double ll = per_sample_ll.mean();
    fi.loglik_trace.push_back(ll);
    fi.iterations = iter + 1;

    if (!trace_reset && ll < prev_ll - kMonotonicitySlack) {
      throw NumericalError("gmm_fit: log-likelihood decreased by " +
                           std::to_string(prev_ll - ll));
    }
    const bool converged =
        !trace_reset && std::abs(ll - prev_ll) <= tol * std::max(1.0, std::abs(prev_ll));
    prev_ll = ll;
    trace_reset = false;
    if (converged) break;

    // M-step from the responsibilities of the current parameters.
    const Eigen::MatrixXd resp =
        (joint.colwise() - per_sample_ll).array().exp().matrix();
    const Eigen::VectorXd nj = resp.colwise().sum();
    GmmModel next = g;
    next.weights = nj / static_cast<double>(n);
    for (int j = 0; j < K; ++j) {
      if (nj[j] <= 0.0) continue;  // collapse handled below
      next.means.row(j) = (resp.col(j).transpose() * z) / nj[j];
      const Eigen::MatrixXd diff = z.rowwise() - next.means.row(j);
      Eigen::MatrixXd cov = (diff.transpose() * (diff.array().colwise() *
                                                 resp.col(j).array()).matrix()) / nj[j];
      cov.diagonal().array() += reg_eps;
      next.covariances[static_cast<std::size_t>(j)] = cov;
    }

    // Re-seed collapsed components from the sample farthest (in Mahalanobis
    // distance) from every live component.
    bool reseeded = false;
    for (int j = 0; j < K; ++j) {
      if (next.weights[j] >= kCollapseWeight) continue;
      if (++fi.reinit_count > 3) {
        throw NumericalError("gmm_fit: component collapsed more than 3 times");
      }
      const auto live_factors = factor_all(next);
      Eigen::VectorXd min_m2 =
          Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
      for (int l = 0; l < K; ++l) {
        if (l == j || next.weights[l] < kCollapseWeight) continue;
        const Eigen::MatrixXd diff = z.rowwise() - next.means.row(l);
        const Eigen::MatrixXd y =
            live_factors[static_cast<std::size_t>(l)]
                .lower.triangularView<Eigen::Lower>()
                .solve(diff.transpose());
        min_m2 = min_m2.cwiseMin(y.colwise().squaredNorm().transpose());
      }
      Eigen::Index farthest = 0;
      min_m2.maxCoeff(&farthest);
      next.means.row(j) = z.row(farthest);
      next.covariances[static_cast<std::size_t>(j)] = global_cov;
      next.weights[j] = 1.0 / K;
      next.weights /= next.weights.sum();
      reseeded = true;
    }
    g = next;
    trace_reset = reseeded;
    if (reseeded) prev_ll = -std::numeric_limits<double>::infinity();
  }
  return g;
}

Eigen::MatrixXd gmm_posterior_batch(const GmmModel& g,
                                    const Eigen::Ref<const Eigen::MatrixXd>& z) {
  if (z.cols() != g.dim()) throw ContractViolation("gmm_posterior: dimension mismatch");
  if (!z.allFinite()) throw ContractViolation("gmm_posterior: non-finite input");
  const auto factors = factor_all(g);
  const Eigen::MatrixXd joint = joint_log_density(g, factors, z);
  const Eigen::VectorXd ll = logsumexp_rows(joint);
  return (joint.colwise() - ll).array().exp().matrix();
}

Eigen::VectorXd gmm_loglik_batch(const GmmModel& g,
                                 const Eigen::Ref<const Eigen::MatrixXd>& z) {
  if (z.cols() != g.dim()) throw ContractViolation("gmm_loglik: dimension mismatch");
  if (!z.allFinite()) throw ContractViolation("gmm_loglik: non-finite input");
  const auto factors = factor_all(g);
  return logsumexp_rows(joint_log_density(g, factors, z));
}

Eigen::VectorXd gmm_posterior(const GmmModel& g,
                              const Eigen::Ref<const Eigen::VectorXd>& z) {
  return gmm_posterior_batch(g, z.transpose()).row(0).transpose();
}

double gmm_loglik(const GmmModel& g, const Eigen::Ref<const Eigen::VectorXd>& z) {
  return gmm_loglik_batch(g, z.transpose())[0];
}

}  // namespace tnet

#include "tnet/triplet.hpp"

#include <cmath>

#include "tnet/errors.hpp"

namespace tnet {

void TripletConfig::validate() const {
  if (margin <= 0.0) throw ConfigError("triplet margin must be > 0");
  if (lambda < 0.0) throw ConfigError("triplet lambda must be >= 0");
  if (batch_size < 4) throw ConfigError("triplet batch size must be >= 4");
}

Eigen::MatrixXd pairwise_l1(const Eigen::Ref<const Eigen::MatrixXd>& embeddings) {
  if (!embeddings.allFinite()) {
    throw NumericalError("pairwise_l1: non-finite embeddings");
  }
  const Eigen::Index b = embeddings.rows();
  Eigen::MatrixXd dist(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < b; ++j) {
      const double d = (embeddings.row(i) - embeddings.row(j)).cwiseAbs().sum();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

MiningResult mine_batch_hard(const Eigen::Ref<const Eigen::MatrixXd>& dist,
                             const std::vector<int>& labels) {
  const Eigen::Index b = dist.rows();
  if (dist.cols() != b || static_cast<Eigen::Index>(labels.size()) != b) {
    throw ContractViolation("mine_batch_hard: distance/label shape mismatch");
  }
  MiningResult out;
  out.hardest_positive.assign(static_cast<std::size_t>(b), -1);
  out.hardest_negative.assign(static_cast<std::size_t>(b), -1);
  out.valid.assign(static_cast<std::size_t>(b), 0);
  for (Eigen::Index i = 0; i < b; ++i) {
    int pos = -1, neg = -1;
    double pos_d = -1.0, neg_d = 0.0;
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
        if (dist(i, j) > pos_d) {
          pos_d = dist(i, j);
          pos = static_cast<int>(j);
        }
      } else {
        if (neg < 0 || dist(i, j) < neg_d) {
          neg_d = dist(i, j);
          neg = static_cast<int>(j);
        }
      }
    }
    if (pos >= 0 && neg >= 0) {
      out.hardest_positive[static_cast<std::size_t>(i)] = pos;
      out.hardest_negative[static_cast<std::size_t>(i)] = neg;
      out.valid[static_cast<std::size_t>(i)] = 1;
      ++out.valid_count;
    }
  }
  return out;
}

namespace {

// d|x - y|/dx, componentwise, sign(0) = 0.
inline void add_l1_sign(Eigen::MatrixXd& grad, Eigen::Index into, Eigen::Index a,
                        Eigen::Index b, const Eigen::Ref<const Eigen::MatrixXd>& e,
                        double scale) {
  for (Eigen::Index k = 0; k < e.cols(); ++k) {
    const double diff = e(a, k) - e(b, k);
    if (diff > 0.0) grad(into, k) += scale;
    else if (diff < 0.0) grad(into, k) -= scale;
  }
}

}  // namespace

TripletLossResult triplet_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                               const std::vector<int>& labels,
                               const TripletConfig& cfg) {
  if (!embeddings.allFinite()) {
    throw NumericalError("triplet_loss: non-finite embeddings");
  }
  const Eigen::Index b = embeddings.rows();
  if (static_cast<Eigen::Index>(labels.size()) != b) {
    throw ContractViolation("triplet_loss: label count mismatch");
  }

  TripletLossResult res;
  res.grad = Eigen::MatrixXd::Zero(b, embeddings.cols());
  const Eigen::MatrixXd dist = pairwise_l1(embeddings);
  res.mining = mine_batch_hard(dist, labels);
  if (res.mining.valid_count == 0) return res;

  const double inv_n = 1.0 / res.mining.valid_count;
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    if (!res.mining.valid[static_cast<std::size_t>(i)]) continue;
    const Eigen::Index p = res.mining.hardest_positive[static_cast<std::size_t>(i)];
    const Eigen::Index n = res.mining.hardest_negative[static_cast<std::size_t>(i)];
    const double hinge = dist(i, p) - dist(i, n) + cfg.margin;
    if (hinge > 0.0) {
      total += hinge;
      ++res.mining.active_count;
      add_l1_sign(res.grad, i, i, p, embeddings, inv_n);
      add_l1_sign(res.grad, p, p, i, embeddings, inv_n);
      add_l1_sign(res.grad, i, n, i, embeddings, inv_n);
      add_l1_sign(res.grad, n, n, i, embeddings, -inv_n);
    }
    if (cfg.lambda > 0.0) {
      for (Eigen::Index m : {i, p, n}) {
        const double norm = embeddings.row(m).norm();
        total += cfg.lambda * norm;
        if (norm > 0.0) {
          res.grad.row(m) += (cfg.lambda * inv_n / norm) * embeddings.row(m);
        }
      }
    }
  }
  res.loss = total * inv_n;
  return res;
}

}  // namespace tnet

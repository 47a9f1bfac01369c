// Test-only reference implementations, kept independent of the library's
// computation paths so they can serve as oracles.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tnet/network.hpp"
#include "tnet/triplet.hpp"

namespace oracles {

// Cyclic Jacobi eigendecomposition for symmetric matrices; independent of
// the Eigen solver used by the library.
struct JacobiResult {
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors;
};

inline JacobiResult jacobi_sym_eig(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) < 1e-14 * scale) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
        rot(p, p) = c;
        rot(q, q) = c;
        rot(p, q) = s;
        rot(q, p) = -s;
        a = rot.transpose() * a * rot;
        v = v * rot;
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&a](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  JacobiResult res;
  res.eigenvalues.resize(n);
  res.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    res.eigenvalues[i] = a(order[static_cast<std::size_t>(i)],
                           order[static_cast<std::size_t>(i)]);
    res.eigenvectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return res;
}

// Straight-line re-implementation of the encoder forward pass: direct
// convolution loops per image, no im2col or batched GEMM.
inline Eigen::VectorXd reference_forward(const tnet::EmbeddingNetwork& net,
                                         const Eigen::MatrixXd& image) {
  std::vector<Eigen::MatrixXd> maps{image};
  for (int blk = 0; blk < net.config.num_blocks(); ++blk) {
    const Eigen::MatrixXd& w = net.conv_weight(blk);
    const Eigen::MatrixXd& b = net.conv_bias(blk);
    const int cin = static_cast<int>(maps.size());
    const int h = static_cast<int>(maps[0].rows());
    const int wd = static_cast<int>(maps[0].cols());
    std::vector<Eigen::MatrixXd> convs;
    for (int co = 0; co < w.rows(); ++co) {
      Eigen::MatrixXd out(h, wd);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wd; ++x) {
          double acc = b(co, 0);
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int yy = y + ky - 1, xx = x + kx - 1;
              if (yy < 0 || yy >= h || xx < 0 || xx >= wd) continue;
              for (int ci = 0; ci < cin; ++ci) {
                acc += w(co, (ky * 3 + kx) * cin + ci) *
                       maps[static_cast<std::size_t>(ci)](yy, xx);
              }
            }
          }
          out(y, x) = std::max(acc, 0.0);
        }
      }
      Eigen::MatrixXd pooled(h / 2, wd / 2);
      for (int oy = 0; oy < h / 2; ++oy) {
        for (int ox = 0; ox < wd / 2; ++ox) {
          pooled(oy, ox) = std::max({out(2 * oy, 2 * ox), out(2 * oy, 2 * ox + 1),
                                     out(2 * oy + 1, 2 * ox),
                                     out(2 * oy + 1, 2 * ox + 1)});
        }
      }
      convs.push_back(std::move(pooled));
    }
    maps = std::move(convs);
  }
  Eigen::VectorXd feat(static_cast<Eigen::Index>(maps.size()));
  for (std::size_t c = 0; c < maps.size(); ++c) {
    feat[static_cast<Eigen::Index>(c)] = maps[c].mean();
  }
  return net.dense_weight() * feat + net.dense_bias().col(0);
}

// Central finite difference of a scalar function at x along coordinate i.
inline double central_diff(const std::function<double(double)>& f_of_xi,
                           double xi, double h = 1e-5) {
  return (f_of_xi(xi + h) - f_of_xi(xi - h)) / (2.0 * h);
}

// |a - b| relative to max(floor, |a|, |b|).
inline double rel_err(double a, double b, double floor_val = 1e-3) {
  return std::abs(a - b) / std::max({floor_val, std::abs(a), std::abs(b)});
}

inline Eigen::MatrixXd naive_l1_distances(const Eigen::MatrixXd& e) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(e.rows(), e.rows());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.rows(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < e.cols(); ++k) acc += std::abs(e(i, k) - e(j, k));
      d(i, j) = acc;
    }
  }
  return d;
}

// Exhaustive per-anchor search over all (positive, negative) pairs,
// replicating the argmax/argmin tie-breaks by smallest index.
struct ExhaustiveMined {
  int positive = -1;
  int negative = -1;
  bool valid = false;
};

inline ExhaustiveMined exhaustive_mine(const Eigen::MatrixXd& d,
                                       const std::vector<int>& labels, int anchor) {
  ExhaustiveMined out;
  double best_pos = -1.0, best_neg = 0.0;
  for (int p = 0; p < static_cast<int>(labels.size()); ++p) {
    if (p == anchor || labels[static_cast<std::size_t>(p)] !=
                           labels[static_cast<std::size_t>(anchor)]) {
      continue;
    }
    for (int n = 0; n < static_cast<int>(labels.size()); ++n) {
      if (labels[static_cast<std::size_t>(n)] ==
          labels[static_cast<std::size_t>(anchor)]) {
        continue;
      }
      if (!out.valid) {
        out.positive = p;
        out.negative = n;
        best_pos = d(anchor, p);
        best_neg = d(anchor, n);
        out.valid = true;
        continue;
      }
      if (d(anchor, p) > best_pos) {
        best_pos = d(anchor, p);
        out.positive = p;
      }
      if (d(anchor, n) < best_neg) {
        best_neg = d(anchor, n);
        out.negative = n;
      }
    }
  }
  return out;
}

// Naive triplet loss, recomputing distances and mining from scratch.
inline double naive_triplet_loss(const Eigen::MatrixXd& e,
                                 const std::vector<int>& labels,
                                 const tnet::TripletConfig& cfg) {
  const Eigen::MatrixXd d = naive_l1_distances(e);
  double total = 0.0;
  int valid = 0;
  for (int a = 0; a < static_cast<int>(labels.size()); ++a) {
    const ExhaustiveMined m = exhaustive_mine(d, labels, a);
    if (!m.valid) continue;
    ++valid;
    total += std::max(d(a, m.positive) - d(a, m.negative) + cfg.margin, 0.0);
    total += cfg.lambda * (e.row(a).norm() + e.row(m.positive).norm() +
                           e.row(m.negative).norm());
  }
  return valid == 0 ? 0.0 : total / valid;
}

// Multivariate normal density straight from the formula (explicit inverse
// and determinant, no log space, no Cholesky).
inline double gaussian_density_direct(const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& cov) {
  const Eigen::Index k = z.size();
  const Eigen::MatrixXd inv = cov.inverse();
  const double det = cov.determinant();
  const Eigen::VectorXd diff = z - mean;
  const double quad = diff.dot(inv * diff);
  return std::exp(-0.5 * quad) /
         std::sqrt(std::pow(2.0 * M_PI, static_cast<double>(k)) * det);
}

inline double naive_cross_entropy(const Eigen::MatrixXd& logits,
                                  const std::vector<int>& targets) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double denom = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) denom += std::exp(logits(i, c));
    total += -std::log(std::exp(logits(i, targets[static_cast<std::size_t>(i)])) / denom);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace oracles

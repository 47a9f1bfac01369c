#pragma once

#include <Eigen/Core>
#include <vector>

namespace tnet {

struct TripletConfig {
  double margin = 2.0;
  double lambda = 0.05;  // L2 penalty on the embedding norms
  int batch_size = 64;

  void validate() const;
};

// Batch-hard mining outcome. An anchor is valid when its class has another
// sample in the batch and at least one other class is present. active_count
// (anchors with positive hinge) is filled in by triplet_loss.
struct MiningResult {
  std::vector<int> hardest_positive;  // -1 where invalid
  std::vector<int> hardest_negative;  // -1 where invalid
  std::vector<char> valid;
  int valid_count = 0;
  int active_count = 0;
};

// L1 distance matrix: dist(i, j) = sum_k |e(i, k) - e(j, k)|.
Eigen::MatrixXd pairwise_l1(const Eigen::Ref<const Eigen::MatrixXd>& embeddings);

// Per anchor i: hardest positive = argmax_{j != i, label j = label i} dist(i, j),
// hardest negative = argmin_{label j != label i} dist(i, j); ties go to the
// smallest index.
MiningResult mine_batch_hard(const Eigen::Ref<const Eigen::MatrixXd>& dist,
                             const std::vector<int>& labels);

struct TripletLossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // B x D, d(loss)/d(embeddings)
  MiningResult mining;
};

// Mean over valid anchors of
//   max(d(a, p) - d(a, n) + margin, 0)
//     + lambda * (|e_a|_2 + |e_p|_2 + |e_n|_2)
// with the exact subgradient (sign(0) = 0 for the L1 terms; the gradient of
// a zero embedding's norm is 0). No valid anchors: loss 0, zero gradient.
TripletLossResult triplet_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                               const std::vector<int>& labels,
                               const TripletConfig& cfg);

}  // namespace tnet

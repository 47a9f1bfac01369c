#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "tnet/network.hpp"
#include "tnet/slices.hpp"
#include "tnet/volume.hpp"

namespace tnet {

// Fully-connected classification head on top of the shared backbone.
struct SoftmaxHead {
  Eigen::MatrixXd weight;  // D x C
  Eigen::VectorXd bias;    // C

  int num_classes() const { return static_cast<int>(bias.size()); }
  static SoftmaxHead init(int embedding_dim, int num_classes, Rng& rng);
};

struct CrossEntropyResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_logits;  // B x C, (softmax - onehot)/B
};

// Mean of -log softmax(logits)[target], computed via log-sum-exp.
CrossEntropyResult cross_entropy_loss(const Eigen::Ref<const Eigen::MatrixXd>& logits,
                                      const std::vector<int>& targets);

// Row-wise softmax probabilities.
Eigen::MatrixXd softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits);

struct BaselineModel {
  EmbeddingNetwork backbone;
  SoftmaxHead head;
  std::vector<std::string> classes;

  Eigen::MatrixXd logits(const Batch& batch, ForwardCache* cache = nullptr) const;
  void validate() const;
};

struct BaselineClassification {
  int label_index = -1;
  std::vector<int> slice_labels;
};

// Per-slice argmax over softmax; volume label by plurality, ties broken by
// the larger softmax probability summed over slices, then class order.
BaselineClassification classify_slices_baseline(const BaselineModel& m,
                                                const std::vector<SliceSample>& slices);
BaselineClassification classify_volume_baseline(const BaselineModel& m,
                                                const Volume& v, int n_per_axis,
                                                double sigma_frac, Rng& rng,
                                                const NoiseSpec* corrupt_all = nullptr);

}  // namespace tnet

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "tnet/rng.hpp"

namespace tnet {

// Convolutional encoder shape: per block a 3x3 stride-1 same-padded
// convolution, ReLU, then 2x2 max pooling; after the last block a global
// average pool and a dense layer down to embedding_dim.
struct NetworkConfig {
  int input_h = 32;
  int input_w = 32;
  std::vector<int> filters{16, 32, 64};
  int embedding_dim = 32;

  int num_blocks() const { return static_cast<int>(filters.size()); }
  int pool_factor() const { return 1 << num_blocks(); }
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
};

// Parameter order: conv<i>.weight (Cout x Cin*9), conv<i>.bias (Cout x 1)
// per block, then dense.weight (D x C_last), dense.bias (D x 1).
// Weight column (ky*3 + kx)*Cin + ci pairs with input channel ci at kernel
// offset (ky-1, kx-1).
struct EmbeddingNetwork {
  NetworkConfig config;
  std::vector<Tensor> params;
  // Bumped on every optimizer step; lets backward() reject stale caches.
  std::uint64_t revision = 0;

  Eigen::MatrixXd& conv_weight(int block) { return params[2 * static_cast<std::size_t>(block)].value; }
  const Eigen::MatrixXd& conv_weight(int block) const { return params[2 * static_cast<std::size_t>(block)].value; }
  Eigen::MatrixXd& conv_bias(int block) { return params[2 * static_cast<std::size_t>(block) + 1].value; }
  const Eigen::MatrixXd& conv_bias(int block) const { return params[2 * static_cast<std::size_t>(block) + 1].value; }
  Eigen::MatrixXd& dense_weight() { return params[2 * static_cast<std::size_t>(config.num_blocks())].value; }
  const Eigen::MatrixXd& dense_weight() const { return params[2 * static_cast<std::size_t>(config.num_blocks())].value; }
  Eigen::MatrixXd& dense_bias() { return params[2 * static_cast<std::size_t>(config.num_blocks()) + 1].value; }
  const Eigen::MatrixXd& dense_bias() const { return params[2 * static_cast<std::size_t>(config.num_blocks()) + 1].value; }

  // conv/dense tensors; trainers may append extra head tensors after these.
  std::size_t backbone_tensor_count() const {
    return 2 * static_cast<std::size_t>(config.num_blocks()) + 2;
  }
  std::size_t parameter_count() const;

  // Fan-in scaled Gaussian init for weights, zero biases, drawn from `rng`
  // in parameter order (weights filled in storage order).
  static EmbeddingNetwork init(const NetworkConfig& config, Rng& rng);
};

using Batch = std::vector<Eigen::MatrixXd>;  // each image input_h x input_w

struct BlockCache {
  Eigen::MatrixXd patches;    // (Cin*9) x (B*H*W), conv input as im2col
  Eigen::MatrixXd post_relu;  // Cout x (B*H*W)
  Eigen::MatrixXi pool_argmax;  // Cout x (B*H*W/4), source column per max
  int h = 0, w = 0;           // conv input spatial dims
};

struct ForwardCache {
  const EmbeddingNetwork* net = nullptr;
  std::uint64_t revision = 0;
  int batch = 0;
  std::vector<BlockCache> blocks;
  Eigen::MatrixXd features;  // C_last x B, global-average-pooled
};

// Embeds a batch; returns B x D. Pass a cache to enable backward(); the
// cache's buffers are reused across calls of the same shape.
Eigen::MatrixXd forward(const EmbeddingNetwork& net, const Batch& batch,
                        ForwardCache* cache = nullptr);

using Gradients = std::vector<Eigen::MatrixXd>;  // aligned with params

// Exact parameter gradients for the batch embedded into `cache`, given the
// loss gradient with respect to the embeddings (B x D). Adds the
// regularization gradient l2_weight*2*theta + l1_weight*sign(theta) to every
// parameter, with sign(0) = 0.
Gradients backward(const EmbeddingNetwork& net, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& grad_embeddings,
                   double l2_weight, double l1_weight);

}  // namespace tnet

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "tnet/network.hpp"

namespace tnet {

struct OptimizerState {
  double base_lr = 1e-3;
  double momentum = 0.9;
  double decay_rate = 0.9;
  int decay_steps = 1000;
  double l2_weight = 1e-5;
  double l1_weight = 1e-6;
  std::uint64_t step = 0;
  std::vector<Eigen::MatrixXd> velocity;  // mirrors the parameter shapes

  static OptimizerState init(const std::vector<Tensor>& params);
};

// Continuous exponential decay: base_lr * decay_rate^(step / decay_steps).
double learning_rate(const OptimizerState& opt);

// Nesterov update: v <- mu*v - lr*g; theta <- theta + mu*v - lr*g.
// Throws NumericalError naming the tensor if a gradient is non-finite.
void sgd_nesterov_step(std::vector<Tensor>& params, const Gradients& grads,
                       OptimizerState& opt);

// Same update, also bumping the network's cache revision.
void sgd_nesterov_step(EmbeddingNetwork& net, const Gradients& grads,
                       OptimizerState& opt);

}  // namespace tnet

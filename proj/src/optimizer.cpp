#include "tnet/optimizer.hpp"

#include <cmath>

#include "tnet/errors.hpp"

namespace tnet {

OptimizerState OptimizerState::init(const std::vector<Tensor>& params) {
  OptimizerState opt;
  opt.velocity.reserve(params.size());
  for (const auto& p : params) {
    opt.velocity.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
  return opt;
}

double learning_rate(const OptimizerState& opt) {
  return opt.base_lr * std::pow(opt.decay_rate,
                                static_cast<double>(opt.step) / opt.decay_steps);
}

void sgd_nesterov_step(std::vector<Tensor>& params, const Gradients& grads,
                       OptimizerState& opt) {
  if (grads.size() != params.size() || opt.velocity.size() != params.size()) {
    throw ContractViolation("sgd_nesterov_step: gradient/velocity count mismatch");
  }
  const double lr = learning_rate(opt);
  const double mu = opt.momentum;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Eigen::MatrixXd& g = grads[i];
    if (g.rows() != params[i].value.rows() || g.cols() != params[i].value.cols()) {
      throw ContractViolation("sgd_nesterov_step: gradient shape mismatch for " +
                              params[i].name);
    }
    if (!g.allFinite()) {
      throw NumericalError("divergence: non-finite gradient in " + params[i].name);
    }
    Eigen::MatrixXd& v = opt.velocity[i];
    v = mu * v - lr * g;
    params[i].value += mu * v - lr * g;
  }
  ++opt.step;
}

void sgd_nesterov_step(EmbeddingNetwork& net, const Gradients& grads,
                       OptimizerState& opt) {
  sgd_nesterov_step(net.params, grads, opt);
  ++net.revision;
}

}  // namespace tnet

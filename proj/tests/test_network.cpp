#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tnet/errors.hpp"
#include "tnet/network.hpp"
#include "tnet/optimizer.hpp"
#include "tnet/rng.hpp"
#include "tnet/triplet.hpp"

using namespace tnet;

namespace {

NetworkConfig toy_config() {
  NetworkConfig cfg;
  cfg.input_h = 8;
  cfg.input_w = 8;
  cfg.filters = {2, 3};
  cfg.embedding_dim = 4;
  return cfg;
}

Batch random_batch(int n, int h, int w, Rng& rng) {
  Batch batch;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd img(h, w);
    for (Eigen::Index k = 0; k < img.size(); ++k) img.data()[k] = rng.next_double();
    batch.push_back(std::move(img));
  }
  return batch;
}

double reg_term(const EmbeddingNetwork& net, double l2, double l1) {
  double total = 0.0;
  for (const auto& p : net.params) {
    total += l2 * p.value.squaredNorm() + l1 * p.value.cwiseAbs().sum();
  }
  return total;
}

}  // namespace

TEST_CASE("forward: zero weights give zero embeddings") {
  Rng rng(1);
  EmbeddingNetwork net = EmbeddingNetwork::init(toy_config(), rng);
  for (auto& p : net.params) p.value.setZero();
  const Batch batch = random_batch(3, 8, 8, rng);
  CHECK(forward(net, batch).isZero(0.0));
}

TEST_CASE("forward: batch independence") {
  Rng rng(2);
  EmbeddingNetwork net = EmbeddingNetwork::init(toy_config(), rng);
  Batch batch = random_batch(8, 8, 8, rng);
  const Eigen::MatrixXd all = forward(net, batch);
  for (int i : {0, 3, 7}) {
    const Eigen::MatrixXd one = forward(net, {batch[static_cast<std::size_t>(i)]});
    CHECK((one.row(0) - all.row(i)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward matches the straight-line reference implementation") {
  Rng rng(3);
  // Toy config and the production-sized config.
  for (NetworkConfig cfg : {toy_config(), NetworkConfig{}}) {
    EmbeddingNetwork net = EmbeddingNetwork::init(cfg, rng);
    const Batch batch = random_batch(2, cfg.input_h, cfg.input_w, rng);
    const Eigen::MatrixXd emb = forward(net, batch);
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXd ref =
          oracles::reference_forward(net, batch[static_cast<std::size_t>(i)]);
      CHECK((emb.row(i).transpose() - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("forward rejects mismatched shapes; backward rejects stale caches") {
  Rng rng(4);
  EmbeddingNetwork net = EmbeddingNetwork::init(toy_config(), rng);
  CHECK_THROWS_AS(forward(net, random_batch(1, 4, 4, rng)), ContractViolation);
  CHECK_THROWS_AS(forward(net, Batch{}), ContractViolation);

  const Batch batch = random_batch(2, 8, 8, rng);
  ForwardCache cache;
  forward(net, batch, &cache);
  OptimizerState opt = OptimizerState::init(net.params);
  Gradients zero;
  for (const auto& p : net.params) {
    zero.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
  sgd_nesterov_step(net, zero, opt);
  CHECK_THROWS_AS(
      backward(net, cache, Eigen::MatrixXd::Zero(2, 4), 0.0, 0.0),
      ContractViolation);
}

TEST_CASE("backward: zero upstream gradient and linearity") {
  Rng rng(5);
  EmbeddingNetwork net = EmbeddingNetwork::init(toy_config(), rng);
  const Batch batch = random_batch(3, 8, 8, rng);
  ForwardCache cache;
  forward(net, batch, &cache);

  const Gradients zero = backward(net, cache, Eigen::MatrixXd::Zero(3, 4), 0.0, 0.0);
  for (const auto& g : zero) CHECK(g.isZero(0.0));

  Eigen::MatrixXd ge(3, 4);
  for (Eigen::Index k = 0; k < ge.size(); ++k) ge.data()[k] = rng.next_gaussian();
  const Gradients g1 = backward(net, cache, ge, 0.0, 0.0);
  const Gradients g2 = backward(net, cache, 2.0 * ge, 0.0, 0.0);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK((g2[i] - 2.0 * g1[i]).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("backward matches central finite differences (linear readout)") {
  Rng rng(6);
  EmbeddingNetwork net = EmbeddingNetwork::init(toy_config(), rng);
  const Batch batch = random_batch(3, 8, 8, rng);
  Eigen::MatrixXd ge(3, 4);
  for (Eigen::Index k = 0; k < ge.size(); ++k) ge.data()[k] = rng.next_gaussian();
  const double l2 = 1e-5, l1 = 1e-6;

  ForwardCache cache;
  forward(net, batch, &cache);
  const Gradients analytic = backward(net, cache, ge, l2, l1);

  // Loss = <ge, forward(net)> + regularization.
  auto loss = [&]() {
    return (forward(net, batch).array() * ge.array()).sum() + reg_term(net, l2, l1);
  };
  const double h = 1e-5;
  for (std::size_t pi = 0; pi < net.params.size(); ++pi) {
    Eigen::MatrixXd& p = net.params[pi].value;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      p.data()[k] = saved + h;
      const double above = loss();
      p.data()[k] = saved - h;
      const double below = loss();
      p.data()[k] = saved;
      const double fd = (above - below) / (2.0 * h);
      CHECK(oracles::rel_err(analytic[pi].data()[k], fd) < 1e-6);
    }
  }
}

TEST_CASE("gradient check through the triplet loss on a toy net") {
  Rng rng(7);
  EmbeddingNetwork net = EmbeddingNetwork::init(toy_config(), rng);
  const Batch batch = random_batch(6, 8, 8, rng);
  const std::vector<int> labels{0, 0, 1, 1, 2, 2};
  TripletConfig tcfg;
  tcfg.margin = 0.5;
  tcfg.lambda = 0.05;
  const double l2 = 1e-5, l1 = 1e-6;

  ForwardCache cache;
  const Eigen::MatrixXd emb = forward(net, batch, &cache);
  const TripletLossResult tl = triplet_loss(emb, labels, tcfg);
  const Gradients analytic = backward(net, cache, tl.grad, l2, l1);

  auto loss = [&]() {
    return triplet_loss(forward(net, batch), labels, tcfg).loss +
           reg_term(net, l2, l1);
  };
  const double h = 1e-5;
  for (std::size_t pi = 0; pi < net.params.size(); ++pi) {
    Eigen::MatrixXd& p = net.params[pi].value;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      p.data()[k] = saved + h;
      const double above = loss();
      p.data()[k] = saved - h;
      const double below = loss();
      p.data()[k] = saved;
      const double fd = (above - below) / (2.0 * h);
      CHECK(oracles::rel_err(analytic[pi].data()[k], fd) < 1e-6);
    }
  }
}

TEST_CASE("init determinism and config validation") {
  Rng a(9), b(9);
  const EmbeddingNetwork n1 = EmbeddingNetwork::init(toy_config(), a);
  const EmbeddingNetwork n2 = EmbeddingNetwork::init(toy_config(), b);
  for (std::size_t i = 0; i < n1.params.size(); ++i) {
    CHECK(n1.params[i].value.isApprox(n2.params[i].value, 0.0));
  }

  NetworkConfig bad = toy_config();
  bad.input_h = 10;  // not divisible by 4
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = toy_config();
  bad.embedding_dim = 1;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = toy_config();
  bad.filters.clear();
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

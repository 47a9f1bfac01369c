#include "tnet/training.hpp"

#include "tnet/errors.hpp"

namespace tnet {

SlicePool build_slice_pool(std::vector<SliceSample> slices,
                           const DatasetManifest& manifest) {
  SlicePool pool;
  pool.classes = manifest.classes;
  pool.class_groups = manifest.class_groups;
  pool.by_class.resize(pool.classes.size());
  pool.labels.reserve(slices.size());
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const int c = manifest.class_index(slices[i].label);
    pool.labels.push_back(c);
    pool.by_class[static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
  }
  pool.slices = std::move(slices);
  return pool;
}

namespace {

Eigen::MatrixXd prepare_image(const SliceSample& s, const RunConfig& cfg,
                              bool noise_in_train, Rng& rng) {
  Eigen::MatrixXd img = augment_flips(s.image, rng);
  if (noise_in_train && cfg.noise.kind != NoiseKind::none &&
      rng.bernoulli(cfg.noise.apply_prob)) {
    img = corrupt(img, cfg.noise, rng);
  }
  return img;
}

void check_pool(const SlicePool& pool, bool every_class) {
  if (pool.slices.empty()) throw ConfigError("training pool is empty");
  if (every_class) {
    for (std::size_t c = 0; c < pool.by_class.size(); ++c) {
      if (pool.by_class[c].empty()) {
        throw ConfigError("class \"" + pool.classes[c] + "\" has no training slices");
      }
    }
  }
}

}  // namespace

TrainResult train_triplet(const SlicePool& pool, const RunConfig& cfg,
                          bool noise_in_train, Rng& rng) {
  check_pool(pool, true);
  TrainResult res;
  res.net = EmbeddingNetwork::init(cfg.net, rng);
  res.opt = OptimizerState::init(res.net.params);
  res.opt.base_lr = cfg.base_lr;
  res.opt.momentum = cfg.momentum;
  res.opt.decay_rate = cfg.decay_rate;
  res.opt.decay_steps = cfg.decay_steps;
  res.opt.l2_weight = cfg.l2_weight;
  res.opt.l1_weight = cfg.l1_weight;

  const int b = cfg.batch_size;
  Batch batch(static_cast<std::size_t>(b));
  std::vector<int> labels(static_cast<std::size_t>(b));
  ForwardCache cache;
  std::uint64_t class_cursor = 0;
  res.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    for (int i = 0; i < b; ++i) {
      const auto c = static_cast<std::size_t>(class_cursor % pool.classes.size());
      ++class_cursor;
      const auto& members = pool.by_class[c];
      const int pick = members[rng.uniform_index(members.size())];
      batch[static_cast<std::size_t>(i)] =
          prepare_image(pool.slices[static_cast<std::size_t>(pick)], cfg,
                        noise_in_train, rng);
      labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
    }
    const Eigen::MatrixXd emb = forward(res.net, batch, &cache);
    const TripletLossResult loss = triplet_loss(emb, labels, cfg.triplet);
    res.loss_trace.push_back(loss.loss);
    const Gradients grads =
        backward(res.net, cache, loss.grad, cfg.l2_weight, cfg.l1_weight);
    sgd_nesterov_step(res.net, grads, res.opt);
  }
  return res;
}

BaselineTrainResult train_baseline(const SlicePool& pool, const RunConfig& cfg,
                                   bool noise_in_train, Rng& rng) {
  check_pool(pool, true);
  const int num_classes = pool.num_classes();

  EmbeddingNetwork net = EmbeddingNetwork::init(cfg.net, rng);
  SoftmaxHead head = SoftmaxHead::init(cfg.net.embedding_dim, num_classes, rng);
  // The head trains as two extra tensors appended to the backbone so one
  // optimizer state covers everything.
  net.params.push_back({"head.weight", head.weight});
  net.params.push_back({"head.bias", head.bias});
  const std::size_t head_w = net.params.size() - 2;
  const std::size_t head_b = net.params.size() - 1;

  BaselineTrainResult res;
  res.opt = OptimizerState::init(net.params);
  res.opt.base_lr = cfg.base_lr;
  res.opt.momentum = cfg.momentum;
  res.opt.decay_rate = cfg.decay_rate;
  res.opt.decay_steps = cfg.decay_steps;
  res.opt.l2_weight = cfg.l2_weight;
  res.opt.l1_weight = cfg.l1_weight;

  const int b = cfg.batch_size;
  Batch batch(static_cast<std::size_t>(b));
  std::vector<int> targets(static_cast<std::size_t>(b));
  ForwardCache cache;
  res.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    for (int i = 0; i < b; ++i) {
      const int pick = static_cast<int>(rng.uniform_index(pool.slices.size()));
      batch[static_cast<std::size_t>(i)] =
          prepare_image(pool.slices[static_cast<std::size_t>(pick)], cfg,
                        noise_in_train, rng);
      targets[static_cast<std::size_t>(i)] = pool.labels[static_cast<std::size_t>(pick)];
    }
    const Eigen::MatrixXd emb = forward(net, batch, &cache);  // B x D
    const Eigen::MatrixXd logits =
        (emb * net.params[head_w].value).rowwise() +
        net.params[head_b].value.col(0).transpose();
    const CrossEntropyResult ce = cross_entropy_loss(logits, targets);
    res.loss_trace.push_back(ce.loss);

    const Eigen::MatrixXd grad_emb = ce.grad_logits * net.params[head_w].value.transpose();
    Gradients grads = backward(net, cache, grad_emb, cfg.l2_weight, cfg.l1_weight);
    grads[head_w] += emb.transpose() * ce.grad_logits;
    grads[head_b] += ce.grad_logits.colwise().sum().transpose();
    sgd_nesterov_step(net, grads, res.opt);
  }

  res.model.head.weight = net.params[head_w].value;
  res.model.head.bias = net.params[head_b].value.col(0);
  net.params.resize(net.backbone_tensor_count());
  res.model.backbone = std::move(net);
  res.model.classes = pool.classes;
  return res;
}

}  // namespace tnet

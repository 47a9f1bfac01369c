#include "tnet/baseline.hpp"

#include <cmath>

#include "tnet/errors.hpp"
#include "tnet/head.hpp"

namespace tnet {

SoftmaxHead SoftmaxHead::init(int embedding_dim, int num_classes, Rng& rng) {
  if (num_classes < 2) throw ContractViolation("softmax head needs >= 2 classes");
  SoftmaxHead head;
  const double scale = std::sqrt(1.0 / embedding_dim);
  head.weight.resize(embedding_dim, num_classes);
  for (Eigen::Index i = 0; i < head.weight.size(); ++i) {
    head.weight.data()[i] = scale * rng.next_gaussian();
  }
  head.bias = Eigen::VectorXd::Zero(num_classes);
  return head;
}

Eigen::MatrixXd softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  const Eigen::VectorXd mx = logits.rowwise().maxCoeff();
  Eigen::MatrixXd p = (logits.colwise() - mx).array().exp().matrix();
  const Eigen::VectorXd sums = p.rowwise().sum();
  return (p.array().colwise() / sums.array()).matrix();
}

CrossEntropyResult cross_entropy_loss(const Eigen::Ref<const Eigen::MatrixXd>& logits,
                                      const std::vector<int>& targets) {
  const Eigen::Index b = logits.rows();
  const Eigen::Index c = logits.cols();
  if (static_cast<Eigen::Index>(targets.size()) != b) {
    throw ContractViolation("cross_entropy_loss: target count mismatch");
  }
  if (!logits.allFinite()) {
    throw NumericalError("cross_entropy_loss: non-finite logits");
  }
  const Eigen::VectorXd mx = logits.rowwise().maxCoeff();
  const Eigen::VectorXd lse =
      mx.array() +
      (logits.colwise() - mx).array().exp().rowwise().sum().log();

  CrossEntropyResult res;
  res.grad_logits = (logits.colwise() - lse).array().exp().matrix() /
                    static_cast<double>(b);
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= c) throw ContractViolation("cross_entropy_loss: target out of range");
    total += lse[i] - logits(i, t);
    res.grad_logits(i, t) -= 1.0 / static_cast<double>(b);
  }
  res.loss = total / static_cast<double>(b);
  return res;
}

Eigen::MatrixXd BaselineModel::logits(const Batch& batch, ForwardCache* cache) const {
  const Eigen::MatrixXd emb = forward(backbone, batch, cache);  // B x D
  return (emb * head.weight).rowwise() + head.bias.transpose();
}

void BaselineModel::validate() const {
  if (classes.empty()) throw StateError("baseline model has no class list");
  if (head.num_classes() != static_cast<int>(classes.size()) ||
      head.weight.rows() != backbone.config.embedding_dim) {
    throw StateError("baseline head shape mismatch");
  }
}

BaselineClassification classify_slices_baseline(const BaselineModel& m,
                                                const std::vector<SliceSample>& slices) {
  m.validate();
  if (slices.empty()) throw ContractViolation("classify_slices_baseline: no slices");
  Batch batch;
  batch.reserve(slices.size());
  for (const auto& s : slices) batch.push_back(s.image);
  const Eigen::MatrixXd probs = softmax_rows(m.logits(batch));

  BaselineClassification out;
  out.slice_labels.reserve(slices.size());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    out.slice_labels.push_back(static_cast<int>(best));
  }
  out.label_index = majority_vote(out.slice_labels, probs);
  return out;
}

BaselineClassification classify_volume_baseline(const BaselineModel& m,
                                                const Volume& v, int n_per_axis,
                                                double sigma_frac, Rng& rng,
                                                const NoiseSpec* corrupt_all) {
  std::vector<SliceSample> slices = sample_slices(v, n_per_axis, sigma_frac, rng);
  if (corrupt_all && corrupt_all->kind != NoiseKind::none) {
    for (auto& s : slices) s.image = corrupt(s.image, *corrupt_all, rng);
  }
  return classify_slices_baseline(m, slices);
}

}  // namespace tnet

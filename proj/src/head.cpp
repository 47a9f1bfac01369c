#include "tnet/head.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "tnet/binary_io.hpp"
#include "tnet/errors.hpp"
#include "tnet/linalg.hpp"

namespace tnet {

MapClustersResult map_clusters(const GmmModel& g,
                               const Eigen::Ref<const Eigen::MatrixXd>& z_train,
                               const std::vector<int>& labels, int num_classes) {
  if (z_train.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ContractViolation("map_clusters: label count mismatch");
  }
  if (num_classes < 1) throw ContractViolation("map_clusters: num_classes must be >= 1");
  const int K = g.components();

  const Eigen::MatrixXd post = gmm_posterior_batch(g, z_train);
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(K, num_classes);
  std::vector<int> class_totals(static_cast<std::size_t>(num_classes), 0);
  for (Eigen::Index i = 0; i < z_train.rows(); ++i) {
    Eigen::Index cluster = 0;
    post.row(i).maxCoeff(&cluster);
    const int cls = labels[static_cast<std::size_t>(i)];
    if (cls < 0 || cls >= num_classes) {
      throw ContractViolation("map_clusters: label out of range");
    }
    counts(cluster, cls) += 1;
    ++class_totals[static_cast<std::size_t>(cls)];
  }

  int majority_class = 0;
  for (int c = 1; c < num_classes; ++c) {
    if (class_totals[static_cast<std::size_t>(c)] >
        class_totals[static_cast<std::size_t>(majority_class)]) {
      majority_class = c;
    }
  }

  MapClustersResult out;
  out.map.cluster_to_class.resize(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    if (counts.row(j).sum() == 0) {
      out.map.cluster_to_class[static_cast<std::size_t>(j)] = majority_class;
      out.warnings.push_back("cluster " + std::to_string(j) +
                             " is empty; mapped to majority class " +
                             std::to_string(majority_class));
      continue;
    }
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
      if (counts(j, c) > counts(j, best)) best = c;  // ties keep class order
    }
    out.map.cluster_to_class[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

std::string to_string(GateVerdict v) {
  return v == GateVerdict::in_distribution ? "in_distribution"
                                           : "out_of_distribution";
}

UncertaintyGate fit_gate(const GmmModel& g,
                         const Eigen::Ref<const Eigen::MatrixXd>& z_train,
                         double pct) {
  if (z_train.rows() < 100) {
    throw ContractViolation("fit_gate: need >= 100 training samples");
  }
  const Eigen::VectorXd ll = gmm_loglik_batch(g, z_train);
  UncertaintyGate gate;
  gate.percentile = pct;
  gate.tau = percentile(std::vector<double>(ll.data(), ll.data() + ll.size()), pct);
  return gate;
}

GateVerdict gate_sample(const UncertaintyGate& gate, double loglik) {
  return loglik < gate.tau ? GateVerdict::out_of_distribution
                           : GateVerdict::in_distribution;
}

void TripletHead::validate() const {
  if (classes.empty() || classes.size() != class_groups.size()) {
    throw StateError("head: empty or inconsistent class list");
  }
  if (static_cast<int>(label_map.cluster_to_class.size()) != gmm.components()) {
    throw StateError("head: label map does not cover the GMM components");
  }
  for (int c : label_map.cluster_to_class) {
    if (c < 0 || c >= static_cast<int>(classes.size())) {
      throw StateError("head: label map points outside the class list");
    }
  }
  if (projector.components.cols() != gmm.dim()) {
    throw StateError("head: projector/GMM dimension mismatch");
  }
}

namespace {

constexpr char kMagic[4] = {'M', 'H', 'E', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_matrix(BinaryWriter& w, const Eigen::MatrixXd& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
  }
}

Eigen::MatrixXd read_matrix(BinaryReader& r) {
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 26)) r.fail("matrix too large");
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.f64();
  }
  return m;
}

}  // namespace

void save_head(const TripletHead& head, const std::filesystem::path& path) {
  head.validate();
  BinaryWriter w(path);
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(head.classes.size()));
  for (std::size_t i = 0; i < head.classes.size(); ++i) {
    w.str(head.classes[i]);
    w.u32(head.class_groups[i] == Group::base ? 0 : 1);
  }
  write_matrix(w, head.projector.mean);
  write_matrix(w, head.projector.components);
  write_matrix(w, head.projector.explained_variance);
  w.u32(static_cast<std::uint32_t>(head.gmm.components()));
  w.f64(head.gmm.reg_eps);
  write_matrix(w, head.gmm.weights);
  write_matrix(w, head.gmm.means);
  for (const auto& cov : head.gmm.covariances) write_matrix(w, cov);
  for (int c : head.label_map.cluster_to_class) w.u32(static_cast<std::uint32_t>(c));
  w.f64(head.gate.tau);
  w.f64(head.gate.percentile);
  w.close();
}

TripletHead load_head(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kVersion) r.fail("unsupported head version " + std::to_string(version));
  TripletHead head;
  const std::uint32_t nclasses = r.u32();
  if (nclasses == 0 || nclasses > 4096) r.fail("implausible class count");
  for (std::uint32_t i = 0; i < nclasses; ++i) {
    head.classes.push_back(r.str(4096));
    head.class_groups.push_back(r.u32() == 0 ? Group::base : Group::few_shot);
  }
  head.projector.mean = read_matrix(r);
  head.projector.components = read_matrix(r);
  head.projector.explained_variance = read_matrix(r);
  const std::uint32_t K = r.u32();
  if (K == 0 || K > 4096) r.fail("implausible component count");
  head.gmm.reg_eps = r.f64();
  head.gmm.weights = read_matrix(r);
  head.gmm.means = read_matrix(r);
  for (std::uint32_t j = 0; j < K; ++j) head.gmm.covariances.push_back(read_matrix(r));
  for (std::uint32_t j = 0; j < K; ++j) {
    head.label_map.cluster_to_class.push_back(static_cast<int>(r.u32()));
  }
  head.gate.tau = r.f64();
  head.gate.percentile = r.f64();
  r.expect_eof();
  head.validate();
  return head;
}

int majority_vote(const std::vector<int>& slice_labels,
                  const Eigen::Ref<const Eigen::MatrixXd>& label_probs) {
  if (static_cast<Eigen::Index>(slice_labels.size()) != label_probs.rows() ||
      label_probs.cols() < 1) {
    throw ContractViolation("majority_vote: shape mismatch");
  }
  const auto num_classes = static_cast<std::size_t>(label_probs.cols());
  std::vector<int> counts(num_classes, 0);
  for (int l : slice_labels) {
    if (l < 0 || l >= static_cast<int>(num_classes)) {
      throw ContractViolation("majority_vote: label out of range");
    }
    counts[static_cast<std::size_t>(l)] += 1;
  }
  const Eigen::VectorXd summed = label_probs.colwise().sum();
  int best = 0;
  for (std::size_t c = 1; c < num_classes; ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)] ||
        (counts[c] == counts[static_cast<std::size_t>(best)] &&
         summed[static_cast<Eigen::Index>(c)] > summed[best])) {
      best = static_cast<int>(c);
    }
  }
  return best;
}

VolumeClassification classify_slices(const TripletPipeline& p,
                                     const std::vector<SliceSample>& slices) {
  p.head.validate();
  if (slices.empty()) throw ContractViolation("classify_slices: no slices");
  const int num_classes = static_cast<int>(p.head.classes.size());

  Batch batch;
  batch.reserve(slices.size());
  for (const auto& s : slices) batch.push_back(s.image);
  const Eigen::MatrixXd emb = forward(p.net, batch);
  const Eigen::MatrixXd z = pca_project(p.head.projector, emb);
  const Eigen::MatrixXd post = gmm_posterior_batch(p.head.gmm, z);
  const Eigen::VectorXd ll = gmm_loglik_batch(p.head.gmm, z);

  // Fold cluster posteriors onto classes through the label map.
  Eigen::MatrixXd label_probs =
      Eigen::MatrixXd::Zero(post.rows(), num_classes);
  for (int j = 0; j < p.head.gmm.components(); ++j) {
    label_probs.col(p.head.label_map.cluster_to_class[static_cast<std::size_t>(j)]) +=
        post.col(j);
  }

  VolumeClassification out;
  out.slice_labels.reserve(slices.size());
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    Eigen::Index cluster = 0;
    post.row(i).maxCoeff(&cluster);
    out.slice_labels.push_back(
        p.head.label_map.cluster_to_class[static_cast<std::size_t>(cluster)]);
  }
  out.mean_loglik = ll.mean();
  out.label_index = majority_vote(out.slice_labels, label_probs);
  return out;
}

VolumeClassification classify_volume(const TripletPipeline& p, const Volume& v,
                                     int n_per_axis, double sigma_frac, Rng& rng,
                                     const NoiseSpec* corrupt_all) {
  std::vector<SliceSample> slices = sample_slices(v, n_per_axis, sigma_frac, rng);
  if (corrupt_all && corrupt_all->kind != NoiseKind::none) {
    for (auto& s : slices) s.image = corrupt(s.image, *corrupt_all, rng);
  }
  return classify_slices(p, slices);
}

void export_projected_embeddings(std::ostream& out, const TripletPipeline& p,
                                 const std::vector<SliceSample>& slices) {
  p.head.validate();
  out << "volume_id,axis,index,label";
  for (Eigen::Index j = 0; j < p.head.projector.components.cols(); ++j) {
    out << ",z" << j;
  }
  out << "\n";
  Batch batch;
  batch.reserve(slices.size());
  for (const auto& s : slices) batch.push_back(s.image);
  const Eigen::MatrixXd z = pca_project(p.head.projector, forward(p.net, batch));
  char buf[32];
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const auto& s = slices[i];
    out << s.volume_id << ',' << s.axis << ',' << s.index << ',' << s.label;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", z(static_cast<Eigen::Index>(i), j));
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace tnet

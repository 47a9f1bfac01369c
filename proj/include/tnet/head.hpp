#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tnet/gmm.hpp"
#include "tnet/network.hpp"
#include "tnet/pca.hpp"
#include "tnet/slices.hpp"

namespace tnet {

struct LabelMap {
  std::vector<int> cluster_to_class;  // one class index per GMM component
};

struct MapClustersResult {
  LabelMap map;
  std::vector<std::string> warnings;
};

// Hard-assigns each training sample to its argmax-posterior cluster and maps
// every cluster to its plurality class (ties broken by class order). An
// empty cluster maps to the globally most common class, with a warning.
MapClustersResult map_clusters(const GmmModel& g,
                               const Eigen::Ref<const Eigen::MatrixXd>& z_train,
                               const std::vector<int>& labels, int num_classes);

struct UncertaintyGate {
  double tau = 0.0;       // log-likelihood threshold
  double percentile = 1.0;
};

enum class GateVerdict { in_distribution, out_of_distribution };

std::string to_string(GateVerdict v);

// tau = empirical `percentile` (linear interpolation) of the training
// samples' log-likelihoods. Requires >= 100 samples.
UncertaintyGate fit_gate(const GmmModel& g,
                         const Eigen::Ref<const Eigen::MatrixXd>& z_train,
                         double percentile = 1.0);

// out_of_distribution iff loglik < tau.
GateVerdict gate_sample(const UncertaintyGate& gate, double loglik);

// The fitted post-embedding head: PCA projector, GMM, cluster-to-label map,
// uncertainty gate, and the class list they refer to.
struct TripletHead {
  PcaProjector projector;
  GmmModel gmm;
  LabelMap label_map;
  UncertaintyGate gate;
  std::vector<std::string> classes;
  std::vector<Group> class_groups;

  void validate() const;
};

// MHED file: serialized projector, GMM parameters, label map and tau, same
// little-endian conventions as checkpoints.
void save_head(const TripletHead& head, const std::filesystem::path& path);
TripletHead load_head(const std::filesystem::path& path);

struct TripletPipeline {
  EmbeddingNetwork net;
  TripletHead head;
};

struct VolumeClassification {
  int label_index = -1;
  std::vector<int> slice_labels;
  double mean_loglik = 0.0;
};

// Plurality vote over per-slice labels; ties broken by the larger
// probability mass summed across slices (label_probs is slices x classes),
// remaining ties by class order.
int majority_vote(const std::vector<int>& slice_labels,
                  const Eigen::Ref<const Eigen::MatrixXd>& label_probs);

// Embeds, projects and classifies already-sampled slices; the volume label
// is the plurality of slice labels, ties broken by the larger posterior
// probability summed across slices.
VolumeClassification classify_slices(const TripletPipeline& p,
                                     const std::vector<SliceSample>& slices);

// Samples slices from the volume and classifies them. When `corrupt_all` is
// non-null every slice is corrupted before embedding (test-time noise).
VolumeClassification classify_volume(const TripletPipeline& p, const Volume& v,
                                     int n_per_axis, double sigma_frac, Rng& rng,
                                     const NoiseSpec* corrupt_all = nullptr);

// Line-delimited export of PCA-projected embeddings:
// volume_id,axis,index,label,z0,...,z{k-1}
void export_projected_embeddings(std::ostream& out, const TripletPipeline& p,
                                 const std::vector<SliceSample>& slices);

}  // namespace tnet

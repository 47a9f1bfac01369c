#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "tnet/errors.hpp"
#include "tnet/head.hpp"
#include "tnet/linalg.hpp"
#include "tnet/rng.hpp"

using namespace tnet;

namespace {

GmmModel separated_gmm(int K, int dim, double spacing = 10.0) {
  GmmModel g;
  g.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
  g.means = Eigen::MatrixXd::Zero(K, dim);
  for (int j = 0; j < K; ++j) g.means(j, 0) = spacing * j;
  g.covariances.assign(static_cast<std::size_t>(K),
                       Eigen::MatrixXd::Identity(dim, dim));
  return g;
}

Eigen::MatrixXd samples_near(const GmmModel& g, const std::vector<int>& comps,
                             Rng& rng, double sigma = 0.3) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(comps.size()), g.dim());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (int d = 0; d < g.dim(); ++d) {
      z(static_cast<Eigen::Index>(i), d) =
          g.means(comps[i], d) + sigma * rng.next_gaussian();
    }
  }
  return z;
}

}  // namespace

TEST_CASE("map_clusters: clean clusters, plurality, empty cluster") {
  Rng rng(1);
  const GmmModel g = separated_gmm(3, 2);

  // Clean case: each cluster holds one class.
  {
    const Eigen::MatrixXd z = samples_near(g, {0, 0, 1, 1, 2, 2}, rng);
    const MapClustersResult r = map_clusters(g, z, {2, 2, 0, 0, 1, 1}, 3);
    CHECK(r.warnings.empty());
    CHECK(r.map.cluster_to_class == std::vector<int>{2, 0, 1});
  }

  // 60/40 mix inside cluster 0 goes to the 60% class.
  {
    const Eigen::MatrixXd z = samples_near(g, {0, 0, 0, 0, 0, 1, 1}, rng);
    const MapClustersResult r = map_clusters(g, z, {1, 1, 1, 0, 0, 0, 0}, 2);
    CHECK(r.map.cluster_to_class[0] == 1);  // 3 of 5 in cluster 0
    CHECK(r.map.cluster_to_class[1] == 0);
  }

  // Nothing lands in cluster 2: it maps to the global majority class.
  {
    const Eigen::MatrixXd z = samples_near(g, {0, 0, 0, 1, 1}, rng);
    const MapClustersResult r = map_clusters(g, z, {0, 0, 0, 1, 1}, 2);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.map.cluster_to_class[2] == 0);
  }

  // A plurality tie goes to the class earlier in the manifest order.
  {
    const Eigen::MatrixXd z = samples_near(g, {0, 0, 1, 1, 2, 2}, rng);
    const MapClustersResult r = map_clusters(g, z, {1, 0, 0, 1, 1, 0}, 2);
    CHECK(r.map.cluster_to_class[0] == 0);
  }
}

TEST_CASE("fit_gate percentile and verdicts") {
  Rng rng(2);
  const GmmModel g = separated_gmm(1, 2, 0.0);
  std::vector<int> comps(150, 0);
  const Eigen::MatrixXd z = samples_near(g, comps, rng, 1.0);

  const UncertaintyGate gate = fit_gate(g, z, 1.0);
  const Eigen::VectorXd ll = gmm_loglik_batch(g, z);
  const double expected =
      percentile(std::vector<double>(ll.data(), ll.data() + ll.size()), 1.0);
  CHECK(gate.tau == expected);
  CHECK(gate.percentile == 1.0);

  CHECK(gate_sample(gate, gate.tau) == GateVerdict::in_distribution);
  CHECK(gate_sample(gate, gate.tau - 1e-9) == GateVerdict::out_of_distribution);
  CHECK(gate_sample(gate, gate.tau + 1.0) == GateVerdict::in_distribution);

  CHECK_THROWS_AS(fit_gate(g, z.topRows(50), 1.0), ContractViolation);
}

TEST_CASE("majority_vote: unanimity, plurality, tie-breaks") {
  // Unanimous slices.
  Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(3, 2, 0.5);
  CHECK(majority_vote({1, 1, 1}, probs) == 1);

  // 8 vs 7 split.
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) labels.push_back(0);
  for (int i = 0; i < 7; ++i) labels.push_back(1);
  CHECK(majority_vote(labels, Eigen::MatrixXd::Constant(15, 2, 0.5)) == 0);

  // Exact count tie: the label with more summed probability wins.
  Eigen::MatrixXd tied(4, 2);
  tied << 0.9, 0.1, 0.9, 0.1, 0.2, 0.8, 0.3, 0.7;
  CHECK(majority_vote({0, 0, 1, 1}, tied) == 0);
  Eigen::MatrixXd tied2(4, 2);
  tied2 << 0.6, 0.4, 0.6, 0.4, 0.1, 0.9, 0.05, 0.95;
  CHECK(majority_vote({0, 0, 1, 1}, tied2) == 1);

  // Fully tied: class order decides.
  CHECK(majority_vote({0, 1}, Eigen::MatrixXd::Constant(2, 2, 0.5)) == 0);

  CHECK_THROWS_AS(majority_vote({0, 2}, Eigen::MatrixXd::Constant(2, 2, 0.5)),
                  ContractViolation);
}

TEST_CASE("head save/load roundtrip") {
  Rng rng(3);
  TripletHead head;
  head.classes = {"a", "b", "c"};
  head.class_groups = {Group::base, Group::base, Group::few_shot};
  head.gmm = separated_gmm(3, 4);
  head.label_map.cluster_to_class = {2, 0, 1};
  head.gate.tau = -3.25;
  head.gate.percentile = 1.0;
  head.projector.mean = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(6, 4);
  comp.topRows(4) = Eigen::MatrixXd::Identity(4, 4);
  head.projector.components = comp;
  head.projector.explained_variance = Eigen::VectorXd::LinSpaced(4, 4.0, 1.0);

  const auto dir = std::filesystem::temp_directory_path() / "tnet_test_head";
  std::filesystem::create_directories(dir);
  const auto path = dir / "head.mhed";
  save_head(head, path);
  const TripletHead loaded = load_head(path);

  CHECK(loaded.classes == head.classes);
  CHECK(loaded.class_groups == head.class_groups);
  CHECK(loaded.label_map.cluster_to_class == head.label_map.cluster_to_class);
  CHECK(loaded.gate.tau == head.gate.tau);
  CHECK(loaded.projector.mean.isApprox(head.projector.mean, 0.0));
  CHECK(loaded.projector.components.isApprox(head.projector.components, 0.0));
  CHECK(loaded.gmm.means.isApprox(head.gmm.means, 0.0));
  CHECK(loaded.gmm.weights.isApprox(head.gmm.weights, 0.0));
  for (int j = 0; j < 3; ++j) {
    CHECK(loaded.gmm.covariances[static_cast<std::size_t>(j)].isApprox(
        head.gmm.covariances[static_cast<std::size_t>(j)], 0.0));
  }
}

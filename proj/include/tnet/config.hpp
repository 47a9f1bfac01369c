#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tnet/dataset.hpp"
#include "tnet/network.hpp"
#include "tnet/slices.hpp"
#include "tnet/triplet.hpp"

namespace tnet {

// All tunables in one place. Keys are dotted lowercase; the config file is
// `key = value` lines with `#` comments, and CLI flags override file values.
struct RunConfig {
  SyntheticConfig data;          // data.*
  int n_per_axis = 5;            // sampling.n_per_axis
  double sigma_frac = 0.15;      // sampling.sigma_frac
  NetworkConfig net;             // net.filters, net.embedding_dim
  int steps = 3000;              // train.steps
  int batch_size = 64;           // train.batch_size
  double base_lr = 1e-3;         // train.base_lr
  double momentum = 0.9;         // train.momentum
  double decay_rate = 0.9;       // train.decay_rate
  int decay_steps = 1000;        // train.decay_steps
  double l2_weight = 1e-5;       // train.l2
  double l1_weight = 1e-6;       // train.l1
  TripletConfig triplet;         // triplet.margin, triplet.lambda
  int pca_components = 8;        // head.pca_components
  double gmm_reg = 1e-6;         // head.gmm_reg
  double gmm_tol = 1e-6;         // head.gmm_tol
  int gmm_max_iter = 200;        // head.gmm_max_iter
  double gate_percentile = 1.0;  // head.gate_percentile
  NoiseSpec noise;               // noise.kind/sigma/density/apply_prob
  int few_shot_limit = 150;      // fewshot.limit

  void apply(const std::map<std::string, std::string>& kv);
  void validate() const;
  // Deterministic key/value dump used in report config snapshots.
  std::vector<std::pair<std::string, std::string>> snapshot() const;
};

// Parses `key = value` lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

RunConfig load_run_config(const std::filesystem::path* file,
                          const std::map<std::string, std::string>& overrides);

}  // namespace tnet

#pragma once

#include <vector>

#include "tnet/baseline.hpp"
#include "tnet/config.hpp"
#include "tnet/network.hpp"
#include "tnet/optimizer.hpp"
#include "tnet/slices.hpp"
#include "tnet/triplet.hpp"

namespace tnet {

// Training slices indexed by class.
struct SlicePool {
  std::vector<SliceSample> slices;
  std::vector<int> labels;                // class index per slice
  std::vector<std::vector<int>> by_class; // slice positions per class
  std::vector<std::string> classes;
  std::vector<Group> class_groups;

  int num_classes() const { return static_cast<int>(classes.size()); }
};

SlicePool build_slice_pool(std::vector<SliceSample> slices,
                           const DatasetManifest& manifest);

struct TrainResult {
  EmbeddingNetwork net;
  OptimizerState opt;
  std::vector<double> loss_trace;
};

struct BaselineTrainResult {
  BaselineModel model;
  OptimizerState opt;
  std::vector<double> loss_trace;
};

// Triplet training: label-stratified batches (cycling classes, uniform
// slices within a class), flip augmentation, optional per-slice corruption
// with cfg.noise.apply_prob when noise_in_train is set.
TrainResult train_triplet(const SlicePool& pool, const RunConfig& cfg,
                          bool noise_in_train, Rng& rng);

// Baseline training: identical backbone, optimizer, schedule, regularization,
// augmentation and step budget; plain uniform batch sampling and a
// cross-entropy softmax head instead of the triplet objective.
BaselineTrainResult train_baseline(const SlicePool& pool, const RunConfig& cfg,
                                   bool noise_in_train, Rng& rng);

}  // namespace tnet

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tnet/baseline.hpp"
#include "tnet/checkpoint.hpp"
#include "tnet/config.hpp"
#include "tnet/dataset.hpp"
#include "tnet/head.hpp"
#include "tnet/metrics.hpp"

namespace tnet {

enum class ExperimentId { exp1, exp2, exp3, exp4 };
enum class ModelKind { triplet, baseline, both };

std::string to_string(ExperimentId id);
ExperimentId experiment_id_from_string(const std::string& s);
std::string to_string(ModelKind m);
ModelKind model_kind_from_string(const std::string& s);

// One experimental regime:
//   exp1  all data, clean train and test
//   exp2  few-shot classes restricted, clean train and test
//   exp3  noise during training (per-slice apply_prob) and on all test slices
//   exp4  clean training, noise on all test slices
struct ExperimentSpec {
  ExperimentId id = ExperimentId::exp1;
  ModelKind model = ModelKind::both;
  std::optional<int> few_shot_limit;
  NoiseSpec noise;
  bool noise_in_train = false;
  std::uint64_t seed = 0;
  int step_budget = 3000;

  void validate() const;
};

struct ExperimentResult {
  std::optional<MetricsReport> triplet;
  std::optional<MetricsReport> baseline;
};

// Full pipeline for the requested models: sample training slices, train,
// fit the embedding head (triplet arm), classify the test volumes, compute
// metrics, and write reports plus fitted artifacts into out_dir. Both arms
// share the training slices and per-volume evaluation streams, so their
// test conditions are identical. Deterministic given spec.seed.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const DatasetManifest& manifest,
                                const std::filesystem::path& data_dir,
                                const RunConfig& cfg,
                                const std::filesystem::path& out_dir);

struct UncertaintyRow {
  std::string input_id;
  double loglik = 0.0;
  GateVerdict verdict = GateVerdict::in_distribution;
  double tau = 0.0;
};

// Scores one held-out test volume plus three built-in out-of-sample
// generators (binary sphere mask, constant volume, uniform noise) against
// the pipeline's log-likelihood gate.
std::vector<UncertaintyRow> run_uncertainty_demo(const TripletPipeline& pipeline,
                                                 const DatasetManifest& manifest,
                                                 const std::filesystem::path& data_dir,
                                                 const RunConfig& cfg,
                                                 std::uint64_t seed);

// Baseline checkpoint glue: the shared MEMB format with head.* tensors.
CheckpointData baseline_to_checkpoint(const BaselineModel& model,
                                      const OptimizerState& opt);
BaselineModel baseline_from_checkpoint(const CheckpointData& data);

// Embeds slices in batches (no caches); returns N x D.
Eigen::MatrixXd embed_slices(const EmbeddingNetwork& net,
                             const std::vector<SliceSample>& slices,
                             int batch_size);

}  // namespace tnet

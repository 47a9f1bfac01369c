#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tnet/network.hpp"
#include "tnet/optimizer.hpp"

namespace tnet {

// Checkpoint payload: backbone config, optional class names (present for
// softmax-head models, which append head.* tensors to the parameter list),
// optimizer scalars/step, parameters, and velocities.
struct CheckpointData {
  NetworkConfig config;
  std::vector<std::string> class_names;
  OptimizerState opt;
  std::vector<Tensor> params;
};

// MEMB, little-endian: magic "MEMB", u32 version, serialized config and
// optimizer scalars, then per-tensor (name, rank, dims, 64-bit float
// payload). Roundtrips are bit-exact.
void save_checkpoint(const CheckpointData& data, const std::filesystem::path& path);
CheckpointData load_checkpoint(const std::filesystem::path& path);

// Rebuilds the embedding network from a checkpoint's backbone tensors.
EmbeddingNetwork network_from_checkpoint(const CheckpointData& data);

}  // namespace tnet

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tnet/rng.hpp"
#include "tnet/volume.hpp"

namespace tnet {

enum class Group { base, few_shot };

std::string to_string(Group g);
Group group_from_string(const std::string& s);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string label;
  Group group = Group::base;
  Split split = Split::train;
};

// Ordered class list plus one row per volume file. Split fractions are
// respected at volume granularity.
struct DatasetManifest {
  std::vector<std::string> classes;   // order defines class indices
  std::vector<Group> class_groups;    // aligned with classes
  std::vector<ManifestEntry> entries;

  int class_index(const std::string& label) const;
  Group group_of(const std::string& label) const;
  int num_classes() const { return static_cast<int>(classes.size()); }
  // Indices into entries, filtered by split (and optionally label),
  // preserving manifest order.
  std::vector<int> entries_with(Split split) const;
  std::vector<int> entries_with(Split split, const std::string& label) const;
  void validate() const;
};

// Line-delimited UTF-8 manifest with a documented header line; fields are
// tab-separated: path, label, group (base|few_shot), split.
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Reads the entry's MVOL file (relative to data_dir) and attaches label/split.
Volume load_volume(const std::filesystem::path& data_dir, const ManifestEntry& e);

// Assigns splits per volume, stratified per class. Returns warnings for
// classes too small to fill every split (their volumes all go to train).
std::vector<std::string> split_dataset(DatasetManifest& m,
                                       const std::array<double, 3>& fractions,
                                       Rng& rng);

struct SyntheticConfig {
  int base_classes = 4;
  int few_shot_classes = 3;
  int volumes_per_base = 60;
  int volumes_per_few = 30;
  int dim = 32;  // cubic volumes, dim^3 voxels
  std::uint64_t seed = 7;
  std::array<double, 3> fractions{0.7, 0.1, 0.2};

  void validate() const;
};

// Procedural corpus: each class has a distinct radial intensity profile,
// texture frequency band, and contrast polarity derived from its class
// index; few-shot classes are perturbed siblings of base classes so they are
// easy to confuse under data scarcity. Deterministic given the seed. Writes
// MVOL files plus manifest.tsv under out_dir and returns the manifest.
DatasetManifest generate_synthetic_dataset(const SyntheticConfig& cfg,
                                           const std::filesystem::path& out_dir);

}  // namespace tnet

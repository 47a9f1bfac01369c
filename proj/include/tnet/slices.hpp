#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "tnet/dataset.hpp"
#include "tnet/rng.hpp"
#include "tnet/volume.hpp"

namespace tnet {

enum class NoiseKind { none, gaussian, salt_pepper };

std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.1;       // gaussian std in normalized intensity units
  double density = 0.05;    // fraction of corrupted pixels (salt & pepper)
  double apply_prob = 0.5;  // per-slice corruption probability in training

  void validate() const;
};

// A normalized 2D image extracted from a volume, with provenance.
struct SliceSample {
  Eigen::MatrixXd image;  // values in [0, 1]
  std::string label;
  std::string volume_id;
  int axis = 0;
  int index = 0;
};

// Clips to the slice's [p1, p99] percentiles, then maps affinely to [0, 1].
// A constant image maps to all zeros.
Eigen::MatrixXd normalize_intensity(const Eigen::Ref<const Eigen::MatrixXd>& image);

// Gaussian: adds sigma-scaled normal noise and clips to [0, 1]. Salt &
// pepper: each pixel independently corrupted with probability `density`,
// set to 0 or 1 with equal chance. kind none returns the input unchanged.
Eigen::MatrixXd corrupt(const Eigen::Ref<const Eigen::MatrixXd>& image,
                        const NoiseSpec& spec, Rng& rng);

// Left-right and up-down flips, each applied independently with p = 0.5.
Eigen::MatrixXd augment_flips(const Eigen::Ref<const Eigen::MatrixXd>& image,
                              Rng& rng);

// One center-weighted slice index: round(center + sigma_frac * extent * g),
// clamped to [0, extent-1].
int draw_slice_index(Rng& rng, int extent, double sigma_frac);

// n_per_axis normalized slices per orthogonal axis (3 * n_per_axis total),
// indices drawn from a clamped normal around the volume center. Duplicate
// indices are re-drawn a bounded number of times, then accepted.
std::vector<SliceSample> sample_slices(const Volume& v, int n_per_axis,
                                       double sigma_frac, Rng& rng);

// Caps each few-shot class at max_slices training slices, keeping slices
// from the leading training volumes in manifest order. Base classes are
// returned untouched.
std::vector<SliceSample> restrict_few_shot(const std::vector<SliceSample>& slices,
                                           const DatasetManifest& manifest,
                                           int max_slices);

}  // namespace tnet

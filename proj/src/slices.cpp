#include "tnet/slices.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tnet/errors.hpp"
#include "tnet/linalg.hpp"

namespace tnet {

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::salt_pepper: return "salt_pepper";
  }
  throw ContractViolation("unknown noise kind");
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "salt_pepper") return NoiseKind::salt_pepper;
  throw ConfigError("unknown noise kind: \"" + s + "\"");
}

void NoiseSpec::validate() const {
  if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  if (density < 0.0 || density > 1.0) throw ConfigError("noise density must be in [0, 1]");
  if (apply_prob < 0.0 || apply_prob > 1.0) {
    throw ConfigError("noise apply_prob must be in [0, 1]");
  }
}

Eigen::MatrixXd normalize_intensity(const Eigen::Ref<const Eigen::MatrixXd>& image) {
  if (image.size() == 0) throw ContractViolation("normalize_intensity: empty image");
  std::vector<double> values(image.data(), image.data() + image.size());
  const double lo = percentile(values, 1.0);
  const double hi = percentile(std::move(values), 99.0);
  const double range = hi - lo;
  if (range <= 1e-12) return Eigen::MatrixXd::Zero(image.rows(), image.cols());
  return ((image.array() - lo) / range).cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::MatrixXd corrupt(const Eigen::Ref<const Eigen::MatrixXd>& image,
                        const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  Eigen::MatrixXd out = image;
  switch (spec.kind) {
    case NoiseKind::none:
      break;
    case NoiseKind::gaussian: {
      double* p = out.data();
      for (Eigen::Index i = 0; i < out.size(); ++i) {
        p[i] = std::clamp(p[i] + spec.sigma * rng.next_gaussian(), 0.0, 1.0);
      }
      break;
    }
    case NoiseKind::salt_pepper: {
      double* p = out.data();
      for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (rng.bernoulli(spec.density)) p[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      }
      break;
    }
  }
  return out;
}

Eigen::MatrixXd augment_flips(const Eigen::Ref<const Eigen::MatrixXd>& image,
                              Rng& rng) {
  const bool flip_lr = rng.bernoulli(0.5);
  const bool flip_ud = rng.bernoulli(0.5);
  Eigen::MatrixXd out = image;
  if (flip_lr) out = out.rowwise().reverse().eval();
  if (flip_ud) out = out.colwise().reverse().eval();
  return out;
}

int draw_slice_index(Rng& rng, int extent, double sigma_frac) {
  if (extent < 1) throw ContractViolation("draw_slice_index: extent must be >= 1");
  if (sigma_frac <= 0.0) throw ContractViolation("draw_slice_index: sigma_frac must be > 0");
  const double center = (extent - 1) / 2.0;
  const double sigma = sigma_frac * extent;
  const auto idx = static_cast<int>(std::llround(center + sigma * rng.next_gaussian()));
  return std::clamp(idx, 0, extent - 1);
}

std::vector<SliceSample> sample_slices(const Volume& v, int n_per_axis,
                                       double sigma_frac, Rng& rng) {
  if (n_per_axis < 1) throw ContractViolation("sample_slices: n_per_axis must be >= 1");
  v.validate();
  constexpr int kMaxRedraws = 8;
  std::vector<SliceSample> out;
  out.reserve(static_cast<std::size_t>(3 * n_per_axis));
  for (int axis = 0; axis < 3; ++axis) {
    std::set<int> used;
    for (int s = 0; s < n_per_axis; ++s) {
      int idx = draw_slice_index(rng, v.extent(axis), sigma_frac);
      for (int retry = 0; retry < kMaxRedraws && used.count(idx); ++retry) {
        idx = draw_slice_index(rng, v.extent(axis), sigma_frac);
      }
      used.insert(idx);
      SliceSample sample;
      sample.image = normalize_intensity(extract_slice(v, axis, idx));
      sample.label = v.label;
      sample.volume_id = v.id;
      sample.axis = axis;
      sample.index = idx;
      out.push_back(std::move(sample));
    }
  }
  return out;
}

std::vector<SliceSample> restrict_few_shot(const std::vector<SliceSample>& slices,
                                           const DatasetManifest& manifest,
                                           int max_slices) {
  if (max_slices < 1) throw ContractViolation("restrict_few_shot: max_slices must be >= 1");
  manifest.validate();

  // volume id -> positions of its slices, in input order.
  std::map<std::string, std::vector<std::size_t>> by_volume;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    by_volume[slices[i].volume_id].push_back(i);
  }

  std::vector<char> keep(slices.size(), 0);
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (manifest.group_of(slices[i].label) == Group::base) keep[i] = 1;
  }

  for (int c = 0; c < manifest.num_classes(); ++c) {
    if (manifest.class_groups[static_cast<std::size_t>(c)] != Group::few_shot) continue;
    const std::string& cls = manifest.classes[static_cast<std::size_t>(c)];
    bool class_present = false;
    for (const auto& s : slices) {
      if (s.label == cls) { class_present = true; break; }
    }
    if (!class_present) {
      throw ConfigError("few-shot class \"" + cls + "\" has no training slices");
    }
    int kept = 0;
    for (int ei : manifest.entries_with(Split::train, cls)) {
      const auto& entry = manifest.entries[static_cast<std::size_t>(ei)];
      const auto vol_id = std::filesystem::path(entry.path).stem().string();
      auto it = by_volume.find(vol_id);
      if (it == by_volume.end()) continue;
      for (std::size_t pos : it->second) {
        if (kept >= max_slices) break;
        keep[pos] = 1;
        ++kept;
      }
      if (kept >= max_slices) break;
    }
  }

  std::vector<SliceSample> out;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (keep[i]) out.push_back(slices[i]);
  }
  return out;
}

}  // namespace tnet

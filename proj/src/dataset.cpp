#include "tnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "tnet/errors.hpp"

namespace tnet {

std::string to_string(Group g) {
  return g == Group::base ? "base" : "few_shot";
}

Group group_from_string(const std::string& s) {
  if (s == "base") return Group::base;
  if (s == "few_shot") return Group::few_shot;
  throw DataFormatError("unknown group: \"" + s + "\"");
}

int DatasetManifest::class_index(const std::string& label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return static_cast<int>(i);
  }
  throw ContractViolation("label \"" + label + "\" not in manifest classes");
}

Group DatasetManifest::group_of(const std::string& label) const {
  return class_groups[static_cast<std::size_t>(class_index(label))];
}

std::vector<int> DatasetManifest::entries_with(Split split) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> DatasetManifest::entries_with(Split split,
                                               const std::string& label) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split && entries[i].label == label) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

void DatasetManifest::validate() const {
  if (classes.size() != class_groups.size()) {
    throw ContractViolation("manifest: classes/class_groups size mismatch");
  }
  for (const auto& e : entries) {
    const int idx = class_index(e.label);  // throws if unknown
    if (class_groups[static_cast<std::size_t>(idx)] != e.group) {
      throw ContractViolation("manifest: entry group disagrees with class group");
    }
  }
}

namespace {
constexpr const char* kManifestHeader =
    "# tnet-manifest v1\tpath\tlabel\tgroup\tsplit";
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  m.validate();
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open for writing: " + path.string());
  out << kManifestHeader << "\n";
  for (const auto& e : m.entries) {
    out << e.path << '\t' << e.label << '\t' << to_string(e.group) << '\t'
        << to_string(e.split) << '\n';
  }
  if (!out) throw DataFormatError("write failed: " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# tnet-manifest v1", 0) != 0) {
    throw DataFormatError(path.string() + ": missing manifest header line");
  }
  DatasetManifest m;
  std::map<std::string, Group> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string path_field, label, group_s, split_s;
    if (!std::getline(ss, path_field, '\t') || !std::getline(ss, label, '\t') ||
        !std::getline(ss, group_s, '\t') || !std::getline(ss, split_s)) {
      throw DataFormatError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 4 tab-separated fields");
    }
    ManifestEntry e{path_field, label, group_from_string(group_s),
                    split_from_string(split_s)};
    auto it = seen.find(label);
    if (it == seen.end()) {
      seen.emplace(label, e.group);
      m.classes.push_back(label);
      m.class_groups.push_back(e.group);
    } else if (it->second != e.group) {
      throw DataFormatError(path.string() + ":" + std::to_string(lineno) +
                            ": class \"" + label + "\" listed with two groups");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

Volume load_volume(const std::filesystem::path& data_dir, const ManifestEntry& e) {
  Volume v = read_volume(data_dir / e.path);
  v.label = e.label;
  v.split = e.split;
  return v;
}

std::vector<std::string> split_dataset(DatasetManifest& m,
                                       const std::array<double, 3>& fractions,
                                       Rng& rng) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ContractViolation("split fractions must sum to 1");
  }
  std::vector<std::string> warnings;
  for (const auto& cls : m.classes) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      if (m.entries[i].label == cls) idx.push_back(static_cast<int>(i));
    }
    const int n = static_cast<int>(idx.size());
    if (n == 0) continue;
    if (n < 3) {
      for (int i : idx) m.entries[static_cast<std::size_t>(i)].split = Split::train;
      warnings.push_back("class \"" + cls + "\" has only " + std::to_string(n) +
                         " volume(s); all assigned to train");
      continue;
    }
    // Fisher-Yates on the class's volumes.
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(
          rng.uniform_index(static_cast<std::size_t>(i) + 1));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    int n_train = static_cast<int>(std::floor(fractions[0] * n));
    int n_val = static_cast<int>(std::floor(fractions[1] * n));
    int n_test = n - n_train - n_val;
    if (n_test == 0 && n_train > 1) {
      --n_train;
      ++n_test;
    }
    if (n_train == 0) {
      // Keep at least one training volume.
      n_train = 1;
      if (n_test > 1) --n_test; else --n_val;
    }
    for (int i = 0; i < n; ++i) {
      Split s = i < n_train            ? Split::train
                : i < n_train + n_val  ? Split::val
                                       : Split::test;
      m.entries[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])].split = s;
    }
  }
  return warnings;
}

void SyntheticConfig::validate() const {
  if (base_classes < 2) throw ContractViolation("need >= 2 base classes");
  if (few_shot_classes < 1) throw ContractViolation("need >= 1 few-shot class");
  if (volumes_per_base < 1 || volumes_per_few < 1) {
    throw ContractViolation("need >= 1 volume per class");
  }
  if (dim < 16) throw ContractViolation("volume dims must be >= 16 per axis");
}

namespace {

// Smooth band-limited noise: a (cells+1)^3 lattice of gaussian values,
// trilinearly interpolated with smoothstep weights.
class ValueNoise {
 public:
  ValueNoise(int cells, Rng& rng) : cells_(cells), side_(cells + 1) {
    values_.resize(static_cast<std::size_t>(side_) * side_ * side_);
    for (auto& v : values_) v = rng.next_gaussian();
  }

  // p components in [0, 1].
  double at(double px, double py, double pz) const {
    return sample(px * cells_, py * cells_, pz * cells_);
  }

 private:
  double lattice(int i, int j, int k) const {
    i = std::clamp(i, 0, side_ - 1);
    j = std::clamp(j, 0, side_ - 1);
    k = std::clamp(k, 0, side_ - 1);
    return values_[static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(side_) *
                       (static_cast<std::size_t>(j) +
                        static_cast<std::size_t>(side_) * static_cast<std::size_t>(k))];
  }

  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

  double sample(double x, double y, double z) const {
    const int i = static_cast<int>(std::floor(x));
    const int j = static_cast<int>(std::floor(y));
    const int k = static_cast<int>(std::floor(z));
    const double tx = smooth(x - i), ty = smooth(y - j), tz = smooth(z - k);
    double acc = 0.0;
    for (int dk = 0; dk <= 1; ++dk) {
      for (int dj = 0; dj <= 1; ++dj) {
        for (int di = 0; di <= 1; ++di) {
          const double w = (di ? tx : 1.0 - tx) * (dj ? ty : 1.0 - ty) *
                           (dk ? tz : 1.0 - tz);
          acc += w * lattice(i + di, j + dj, k + dk);
        }
      }
    }
    return acc;
  }

  int cells_;
  int side_;
  std::vector<double> values_;
};

struct ClassSignature {
  double ring_radius;   // center of the radial gaussian profile
  double ring_width;
  double amplitude;
  double polarity;      // bright (+1) or dark (-1) profile on the base level
  double texture_freq;  // value-noise cells per axis
  double texture_amp;
  double base_level;
};

// Few-shot classes are perturbed siblings of base classes (shifted profile
// radius, scaled texture band) so they stay easy to confuse under scarcity
// but separable with enough data.
ClassSignature class_signature(int class_index, int n_base) {
  const bool few = class_index >= n_base;
  const int sib = few ? (class_index - n_base) % n_base : class_index;
  ClassSignature s;
  s.ring_radius = n_base > 1 ? 0.72 * sib / (n_base - 1) : 0.35;
  s.ring_width = 0.16 + 0.04 * (sib % 2);
  s.amplitude = 0.55;
  s.polarity = (sib % 2 == 0) ? 1.0 : -1.0;
  s.texture_freq = 3.0 + 2.0 * sib;
  s.texture_amp = 0.16;
  s.base_level = 0.5;
  if (few) {
    s.ring_radius = std::min(0.85, s.ring_radius + 0.15);
    s.texture_freq *= 2.2;
    s.ring_width *= 0.70;
    s.amplitude *= 0.55;
    s.texture_amp *= 2.4;
  }
  return s;
}

Volume synthesize_volume(const ClassSignature& sig, int dim, Rng& rng) {
  // Per-volume jitters; draw order is fixed for reproducibility.
  const double off_x = (rng.next_double() - 0.5) * 0.12;
  const double off_y = (rng.next_double() - 0.5) * 0.12;
  const double off_z = (rng.next_double() - 0.5) * 0.12;
  const double radius = sig.ring_radius + (rng.next_double() - 0.5) * 0.08;
  const double width = sig.ring_width * (1.0 + (rng.next_double() - 0.5) * 0.24);
  const double amp = sig.amplitude * (1.0 + (rng.next_double() - 0.5) * 0.30);
  const double tex_amp = sig.texture_amp * (1.0 + (rng.next_double() - 0.5) * 0.40);
  const double sx = 1.0 + (rng.next_double() - 0.5) * 0.20;
  const double sy = 1.0 + (rng.next_double() - 0.5) * 0.20;
  const double sz = 1.0 + (rng.next_double() - 0.5) * 0.20;

  const int tex_cells = std::max(1, static_cast<int>(std::ceil(sig.texture_freq)));
  const double tex_scale = sig.texture_freq / tex_cells;
  ValueNoise texture(tex_cells, rng);
  ValueNoise bias(2, rng);

  Volume v;
  v.nx = v.ny = v.nz = dim;
  v.voxels.resize(static_cast<std::size_t>(dim) * dim * dim);
  std::size_t at = 0;
  for (int z = 0; z < dim; ++z) {
    const double w = ((z + 0.5) / dim - 0.5 - off_z) * sz;
    for (int y = 0; y < dim; ++y) {
      const double u = ((y + 0.5) / dim - 0.5 - off_y) * sy;
      for (int x = 0; x < dim; ++x) {
        const double t = ((x + 0.5) / dim - 0.5 - off_x) * sx;
        const double r = 2.0 * std::sqrt(t * t + u * u + w * w);
        const double d = r - radius;
        const double profile = amp * std::exp(-d * d / (2.0 * width * width));
        const double tex =
            tex_amp * texture.at(((x + 0.5) / dim) * tex_scale,
                                 ((y + 0.5) / dim) * tex_scale,
                                 ((z + 0.5) / dim) * tex_scale);
        const double bump = bias.at((x + 0.5) / dim, (y + 0.5) / dim,
                                    (z + 0.5) / dim) * 0.06;
        const double noise = rng.next_gaussian() * 0.03;
        v.voxels[at++] = static_cast<float>(
            sig.base_level + sig.polarity * profile + tex + bump + noise);
      }
    }
  }
  return v;
}

}  // namespace

DatasetManifest generate_synthetic_dataset(const SyntheticConfig& cfg,
                                           const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataFormatError("cannot create output directory: " + out_dir.string());

  DatasetManifest m;
  const int total_classes = cfg.base_classes + cfg.few_shot_classes;
  for (int c = 0; c < total_classes; ++c) {
    const bool few = c >= cfg.base_classes;
    m.classes.push_back(few ? "few" + std::to_string(c - cfg.base_classes)
                            : "base" + std::to_string(c));
    m.class_groups.push_back(few ? Group::few_shot : Group::base);
  }

  const Rng root(cfg.seed);
  int volume_counter = 0;
  for (int c = 0; c < total_classes; ++c) {
    const std::string& cls = m.classes[static_cast<std::size_t>(c)];
    const ClassSignature sig = class_signature(c, cfg.base_classes);
    const int n_vols =
        c < cfg.base_classes ? cfg.volumes_per_base : cfg.volumes_per_few;
    const auto cls_dir = out_dir / cls;
    std::filesystem::create_directories(cls_dir, ec);
    if (ec) throw DataFormatError("cannot create directory: " + cls_dir.string());
    for (int i = 0; i < n_vols; ++i) {
      Rng vol_rng = root.split(100 + static_cast<std::uint64_t>(volume_counter));
      Volume v = synthesize_volume(sig, cfg.dim, vol_rng);
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03d", cls.c_str(), i);
      v.id = name;
      v.label = cls;
      const auto rel = cls + "/" + std::string(name) + ".mvol";
      write_volume(v, out_dir / rel);
      m.entries.push_back({rel, cls, m.class_groups[static_cast<std::size_t>(c)],
                           Split::train});
      ++volume_counter;
    }
  }

  Rng split_rng = root.split(0);
  split_dataset(m, cfg.fractions, split_rng);
  write_manifest(m, out_dir / "manifest.tsv");
  return m;
}

}  // namespace tnet

#include "tnet/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tnet/errors.hpp"

namespace tnet {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: \"" + v + "\"");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: \"" + v + "\"");
  }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
  if (out.empty()) throw ConfigError("config key " + key + ": empty list");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

void RunConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "data.base_classes") data.base_classes = to_int(key, value);
    else if (key == "data.few_shot_classes") data.few_shot_classes = to_int(key, value);
    else if (key == "data.volumes_per_base") data.volumes_per_base = to_int(key, value);
    else if (key == "data.volumes_per_few") data.volumes_per_few = to_int(key, value);
    else if (key == "data.dim") data.dim = to_int(key, value);
    else if (key == "data.seed") data.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "sampling.n_per_axis") n_per_axis = to_int(key, value);
    else if (key == "sampling.sigma_frac") sigma_frac = to_double(key, value);
    else if (key == "net.filters") net.filters = to_int_list(key, value);
    else if (key == "net.embedding_dim") net.embedding_dim = to_int(key, value);
    else if (key == "train.steps") steps = to_int(key, value);
    else if (key == "train.batch_size") batch_size = to_int(key, value);
    else if (key == "train.base_lr") base_lr = to_double(key, value);
    else if (key == "train.momentum") momentum = to_double(key, value);
    else if (key == "train.decay_rate") decay_rate = to_double(key, value);
    else if (key == "train.decay_steps") decay_steps = to_int(key, value);
    else if (key == "train.l2") l2_weight = to_double(key, value);
    else if (key == "train.l1") l1_weight = to_double(key, value);
    else if (key == "triplet.margin") triplet.margin = to_double(key, value);
    else if (key == "triplet.lambda") triplet.lambda = to_double(key, value);
    else if (key == "head.pca_components") pca_components = to_int(key, value);
    else if (key == "head.gmm_reg") gmm_reg = to_double(key, value);
    else if (key == "head.gmm_tol") gmm_tol = to_double(key, value);
    else if (key == "head.gmm_max_iter") gmm_max_iter = to_int(key, value);
    else if (key == "head.gate_percentile") gate_percentile = to_double(key, value);
    else if (key == "noise.kind") noise.kind = noise_kind_from_string(value);
    else if (key == "noise.sigma") noise.sigma = to_double(key, value);
    else if (key == "noise.density") noise.density = to_double(key, value);
    else if (key == "noise.apply_prob") noise.apply_prob = to_double(key, value);
    else if (key == "fewshot.limit") few_shot_limit = to_int(key, value);
    else throw ConfigError("unknown config key: \"" + key + "\"");
  }
}

void RunConfig::validate() const {
  data.validate();
  net.validate();
  triplet.validate();
  noise.validate();
  if (n_per_axis < 1) throw ConfigError("sampling.n_per_axis must be >= 1");
  if (sigma_frac <= 0.0) throw ConfigError("sampling.sigma_frac must be > 0");
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (batch_size < 4) throw ConfigError("train.batch_size must be >= 4");
  if (base_lr <= 0.0) throw ConfigError("train.base_lr must be > 0");
  if (decay_rate <= 0.0 || decay_rate > 1.0) {
    throw ConfigError("train.decay_rate must be in (0, 1]");
  }
  if (decay_steps < 1) throw ConfigError("train.decay_steps must be >= 1");
  if (pca_components < 1 || pca_components > net.embedding_dim) {
    throw ConfigError("head.pca_components must be in [1, embedding_dim]");
  }
  if (gmm_max_iter < 1) throw ConfigError("head.gmm_max_iter must be >= 1");
  if (gate_percentile < 0.0 || gate_percentile > 100.0) {
    throw ConfigError("head.gate_percentile must be in [0, 100]");
  }
  if (few_shot_limit < 1) throw ConfigError("fewshot.limit must be >= 1");
  if (net.input_h != data.dim || net.input_w != data.dim) {
    throw ConfigError("network input size must match data.dim");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::snapshot() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("data.base_classes", std::to_string(data.base_classes));
  out.emplace_back("data.few_shot_classes", std::to_string(data.few_shot_classes));
  out.emplace_back("data.volumes_per_base", std::to_string(data.volumes_per_base));
  out.emplace_back("data.volumes_per_few", std::to_string(data.volumes_per_few));
  out.emplace_back("data.dim", std::to_string(data.dim));
  out.emplace_back("data.seed", std::to_string(data.seed));
  out.emplace_back("sampling.n_per_axis", std::to_string(n_per_axis));
  out.emplace_back("sampling.sigma_frac", fmt_double(sigma_frac));
  out.emplace_back("net.filters", fmt_int_list(net.filters));
  out.emplace_back("net.embedding_dim", std::to_string(net.embedding_dim));
  out.emplace_back("train.steps", std::to_string(steps));
  out.emplace_back("train.batch_size", std::to_string(batch_size));
  out.emplace_back("train.base_lr", fmt_double(base_lr));
  out.emplace_back("train.momentum", fmt_double(momentum));
  out.emplace_back("train.decay_rate", fmt_double(decay_rate));
  out.emplace_back("train.decay_steps", std::to_string(decay_steps));
  out.emplace_back("train.l2", fmt_double(l2_weight));
  out.emplace_back("train.l1", fmt_double(l1_weight));
  out.emplace_back("triplet.margin", fmt_double(triplet.margin));
  out.emplace_back("triplet.lambda", fmt_double(triplet.lambda));
  out.emplace_back("head.pca_components", std::to_string(pca_components));
  out.emplace_back("head.gmm_reg", fmt_double(gmm_reg));
  out.emplace_back("head.gmm_tol", fmt_double(gmm_tol));
  out.emplace_back("head.gmm_max_iter", std::to_string(gmm_max_iter));
  out.emplace_back("head.gate_percentile", fmt_double(gate_percentile));
  out.emplace_back("noise.kind", to_string(noise.kind));
  out.emplace_back("noise.sigma", fmt_double(noise.sigma));
  out.emplace_back("noise.density", fmt_double(noise.density));
  out.emplace_back("noise.apply_prob", fmt_double(noise.apply_prob));
  out.emplace_back("fewshot.limit", std::to_string(few_shot_limit));
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

RunConfig load_run_config(const std::filesystem::path* file,
                          const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  if (file) cfg.apply(parse_config_file(*file));
  cfg.apply(overrides);
  // The backbone input size always tracks the volume dimension.
  cfg.net.input_h = cfg.data.dim;
  cfg.net.input_w = cfg.data.dim;
  cfg.validate();
  return cfg;
}

}  // namespace tnet

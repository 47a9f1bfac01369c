// Command-line interface: data generation, training, head fitting,
// classification, the four experiments, the uncertainty demo, and the
// projected-embedding export.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tnet/baseline.hpp"
#include "tnet/checkpoint.hpp"
#include "tnet/config.hpp"
#include "tnet/dataset.hpp"
#include "tnet/errors.hpp"
#include "tnet/harness.hpp"
#include "tnet/head.hpp"
#include "tnet/training.hpp"

namespace fs = std::filesystem;
using namespace tnet;

namespace {

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file,
                  "Key-value config file (key = value lines)");
  cmd->add_option("--set", opts.overrides,
                  "Override a config key, e.g. --set train.steps=100")
      ->take_all();
}

RunConfig build_config(const CommonOpts& opts,
                       const std::map<std::string, std::string>& extra = {}) {
  std::map<std::string, std::string> kv;
  for (const auto& item : opts.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got \"" + item + "\"");
    }
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  for (const auto& [k, v] : extra) kv[k] = v;
  if (!opts.config_file.empty()) {
    const fs::path file = opts.config_file;
    return load_run_config(&file, kv);
  }
  return load_run_config(nullptr, kv);
}

std::vector<SliceSample> sample_split_slices(const DatasetManifest& manifest,
                                             const fs::path& data_dir,
                                             const RunConfig& cfg, Split split,
                                             Rng slice_root) {
  std::vector<SliceSample> out;
  for (int idx : manifest.entries_with(split)) {
    const Volume v = load_volume(data_dir, manifest.entries[static_cast<std::size_t>(idx)]);
    Rng r = slice_root.split(static_cast<std::uint64_t>(idx));
    auto s = sample_slices(v, cfg.n_per_axis, cfg.sigma_frac, r);
    out.insert(out.end(), std::make_move_iterator(s.begin()),
               std::make_move_iterator(s.end()));
  }
  return out;
}

TripletHead fit_head_for(const EmbeddingNetwork& net, const SlicePool& pool,
                         const RunConfig& cfg, Rng head_rng) {
  TripletHead head;
  const Eigen::MatrixXd emb = embed_slices(net, pool.slices, cfg.batch_size);
  head.projector = pca_fit(emb, cfg.pca_components);
  const Eigen::MatrixXd z = pca_project(head.projector, emb);
  head.gmm = gmm_fit(z, pool.num_classes(), head_rng, cfg.gmm_tol,
                     cfg.gmm_max_iter, cfg.gmm_reg);
  MapClustersResult mapped = map_clusters(head.gmm, z, pool.labels, pool.num_classes());
  for (const auto& w : mapped.warnings) std::cerr << "warning: " << w << "\n";
  head.label_map = mapped.map;
  head.gate = fit_gate(head.gmm, z, cfg.gate_percentile);
  head.classes = pool.classes;
  head.class_groups = pool.class_groups;
  return head;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Few-shot volume-modality classification with triplet networks"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic MVOL corpus");
  CommonOpts gen_opts;
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--out", gen_out, "Output corpus directory")->required();
  gen->add_option("--seed", gen_seed, "Overrides data.seed");
  add_common(gen, gen_opts);

  // train
  auto* train = app.add_subcommand("train", "Train the triplet or baseline model");
  CommonOpts train_opts;
  std::string train_model, train_data, train_out, train_noise;
  std::uint64_t train_seed = 0;
  int train_steps = -1;
  int train_fewshot = -1;
  bool train_noisy = false;
  train->add_option("model", train_model, "triplet | baseline")
      ->required()
      ->check(CLI::IsMember({"triplet", "baseline"}));
  train->add_option("--data", train_data, "Corpus directory (with manifest.tsv)")
      ->required();
  train->add_option("--out", train_out, "Checkpoint output path")->required();
  train->add_option("--seed", train_seed, "Run seed (default 0)");
  train->add_option("--steps", train_steps, "Overrides train.steps");
  train->add_option("--noise", train_noise,
                    "Noise kind for --noise-in-train: gaussian | salt_pepper");
  train->add_flag("--noise-in-train", train_noisy,
                  "Corrupt training slices with probability noise.apply_prob");
  train->add_option("--limit", train_fewshot,
                    "Restrict few-shot classes to N training slices (0 = config default)");
  add_common(train, train_opts);

  // fit-head
  auto* fit = app.add_subcommand("fit-head",
                                 "Fit PCA + GMM + label map + gate on training embeddings");
  CommonOpts fit_opts;
  std::string fit_ckpt, fit_data, fit_out;
  std::uint64_t fit_seed = 0;
  fit->add_option("--checkpoint", fit_ckpt, "Trained triplet checkpoint")->required();
  fit->add_option("--data", fit_data, "Corpus directory")->required();
  fit->add_option("--out", fit_out, "Head output path (.mhed)")->required();
  fit->add_option("--seed", fit_seed, "Run seed (default 0)");
  add_common(fit, fit_opts);

  // classify
  auto* cls = app.add_subcommand("classify", "Classify a single MVOL volume");
  CommonOpts cls_opts;
  std::string cls_volume, cls_ckpt, cls_head;
  std::uint64_t cls_seed = 0;
  cls->add_option("volume", cls_volume, "Path to an MVOL file")->required();
  cls->add_option("--checkpoint", cls_ckpt, "Trained triplet checkpoint")->required();
  cls->add_option("--head", cls_head, "Fitted head (.mhed)")->required();
  cls->add_option("--seed", cls_seed, "Slice-sampling seed (default 0)");
  add_common(cls, cls_opts);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run one experimental regime");
  CommonOpts exp_opts;
  std::string exp_id, exp_data, exp_out, exp_noise, exp_model = "both";
  std::uint64_t exp_seed = 0;
  int exp_limit = -1, exp_steps = -1;
  exp->add_option("id", exp_id, "exp1 | exp2 | exp3 | exp4")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2", "exp3", "exp4"}));
  exp->add_option("--data", exp_data, "Corpus directory")->required();
  exp->add_option("--out", exp_out, "Run directory for reports and artifacts")
      ->required();
  exp->add_option("--model", exp_model, "triplet | baseline | both")
      ->check(CLI::IsMember({"triplet", "baseline", "both"}));
  exp->add_option("--seed", exp_seed, "Run seed")->required();
  exp->add_option("--noise", exp_noise, "gaussian | salt_pepper (exp3/exp4)");
  exp->add_option("--limit", exp_limit,
                  "Few-shot slice cap (0 = config default; exp2 applies it automatically)");
  exp->add_option("--steps", exp_steps, "Overrides train.steps");
  add_common(exp, exp_opts);

  // uncertainty-demo
  auto* unc = app.add_subcommand("uncertainty-demo",
                                 "Score out-of-sample inputs against the gate");
  CommonOpts unc_opts;
  std::string unc_ckpt, unc_head, unc_data, unc_out;
  std::uint64_t unc_seed = 0;
  unc->add_option("--checkpoint", unc_ckpt, "Trained triplet checkpoint")->required();
  unc->add_option("--head", unc_head, "Fitted head (.mhed)")->required();
  unc->add_option("--data", unc_data, "Corpus directory")->required();
  unc->add_option("--out", unc_out, "Optional TSV output path");
  unc->add_option("--seed", unc_seed, "Run seed (default 0)");
  add_common(unc, unc_opts);

  // export-embeddings
  auto* expo = app.add_subcommand("export-embeddings",
                                  "Write PCA-projected embeddings as CSV");
  CommonOpts expo_opts;
  std::string expo_ckpt, expo_head, expo_data, expo_out, expo_split = "val";
  std::uint64_t expo_seed = 0;
  expo->add_option("--checkpoint", expo_ckpt, "Trained triplet checkpoint")->required();
  expo->add_option("--head", expo_head, "Fitted head (.mhed)")->required();
  expo->add_option("--data", expo_data, "Corpus directory")->required();
  expo->add_option("--out", expo_out, "CSV output path")->required();
  expo->add_option("--split", expo_split, "train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  expo->add_option("--seed", expo_seed, "Slice-sampling seed (default 0)");
  add_common(expo, expo_opts);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    std::map<std::string, std::string> extra;
    if (gen_seed) extra["data.seed"] = std::to_string(*gen_seed);
    const RunConfig cfg = build_config(gen_opts, extra);
    const DatasetManifest m = generate_synthetic_dataset(cfg.data, gen_out);
    std::cout << "wrote " << m.entries.size() << " volumes across "
              << m.num_classes() << " classes to " << gen_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    RunConfig cfg = build_config(train_opts);
    if (train_steps >= 0) cfg.steps = train_steps;
    if (!train_noise.empty()) cfg.noise.kind = noise_kind_from_string(train_noise);
    cfg.validate();
    if (train_noisy && cfg.noise.kind == NoiseKind::none) {
      throw ConfigError("--noise-in-train needs --noise or noise.kind in the config");
    }
    const fs::path data_dir = train_data;
    const DatasetManifest manifest = read_manifest(data_dir / "manifest.tsv");
    manifest.validate();

    const Rng root(train_seed);
    std::vector<SliceSample> slices =
        sample_split_slices(manifest, data_dir, cfg, Split::train, root.split(1));
    if (train_fewshot >= 0) {
      const int cap = train_fewshot == 0 ? cfg.few_shot_limit : train_fewshot;
      slices = restrict_few_shot(slices, manifest, cap);
    }
    const SlicePool pool = build_slice_pool(std::move(slices), manifest);
    if (train_model == "triplet") {
      Rng rng = root.split(2);
      TrainResult tr = train_triplet(pool, cfg, train_noisy, rng);
      save_checkpoint({cfg.net, {}, tr.opt, tr.net.params}, train_out);
    } else {
      Rng rng = root.split(3);
      BaselineTrainResult br = train_baseline(pool, cfg, train_noisy, rng);
      save_checkpoint(baseline_to_checkpoint(br.model, br.opt), train_out);
    }
    std::cout << "wrote checkpoint " << train_out << "\n";
    return 0;
  }

  if (fit->parsed()) {
    const RunConfig cfg = build_config(fit_opts);
    const fs::path data_dir = fit_data;
    const DatasetManifest manifest = read_manifest(data_dir / "manifest.tsv");
    manifest.validate();
    const CheckpointData ck = load_checkpoint(fit_ckpt);
    const EmbeddingNetwork net = network_from_checkpoint(ck);

    const Rng root(fit_seed);
    const SlicePool pool = build_slice_pool(
        sample_split_slices(manifest, data_dir, cfg, Split::train, root.split(1)),
        manifest);
    const TripletHead head = fit_head_for(net, pool, cfg, root.split(4));
    save_head(head, fit_out);
    std::cout << "wrote head " << fit_out << " (tau = " << head.gate.tau << ")\n";
    return 0;
  }

  if (cls->parsed()) {
    const RunConfig cfg = build_config(cls_opts);
    TripletPipeline pipeline{network_from_checkpoint(load_checkpoint(cls_ckpt)),
                             load_head(cls_head)};
    Volume v = read_volume(cls_volume);
    Rng rng = Rng(cls_seed).split(5);
    const VolumeClassification c =
        classify_volume(pipeline, v, cfg.n_per_axis, cfg.sigma_frac, rng);
    const GateVerdict verdict = gate_sample(pipeline.head.gate, c.mean_loglik);
    std::printf("label: %s\nloglik: %.6f\ntau: %.6f\nverdict: %s\n",
                pipeline.head.classes[static_cast<std::size_t>(c.label_index)].c_str(),
                c.mean_loglik, pipeline.head.gate.tau, to_string(verdict).c_str());
    return 0;
  }

  if (exp->parsed()) {
    const RunConfig cfg = build_config(exp_opts);
    ExperimentSpec spec;
    spec.id = experiment_id_from_string(exp_id);
    spec.model = model_kind_from_string(exp_model);
    spec.seed = exp_seed;
    spec.step_budget = exp_steps >= 0 ? exp_steps : cfg.steps;
    if (!exp_noise.empty()) {
      spec.noise = cfg.noise;
      spec.noise.kind = noise_kind_from_string(exp_noise);
    }
    spec.noise_in_train = spec.id == ExperimentId::exp3;
    if (spec.id == ExperimentId::exp2) {
      spec.few_shot_limit = exp_limit > 0 ? exp_limit : cfg.few_shot_limit;
    } else if (exp_limit >= 0) {
      spec.few_shot_limit = exp_limit == 0 ? cfg.few_shot_limit : exp_limit;
    }

    const fs::path data_dir = exp_data;
    const DatasetManifest manifest = read_manifest(data_dir / "manifest.tsv");
    const ExperimentResult result =
        run_experiment(spec, manifest, data_dir, cfg, exp_out);
    for (const auto& report : {result.triplet, result.baseline}) {
      if (!report) continue;
      std::printf("%s %s: balanced accuracy %.4f (B f1 %.4f, F f1 %.4f)\n",
                  report->experiment_id.c_str(), report->model_name.c_str(),
                  report->balanced_accuracy, report->f1_base, report->f1_few);
    }
    std::cout << "reports written to " << exp_out << "\n";
    return 0;
  }

  if (unc->parsed()) {
    const RunConfig cfg = build_config(unc_opts);
    const fs::path data_dir = unc_data;
    const DatasetManifest manifest = read_manifest(data_dir / "manifest.tsv");
    TripletPipeline pipeline{network_from_checkpoint(load_checkpoint(unc_ckpt)),
                             load_head(unc_head)};
    const auto rows =
        run_uncertainty_demo(pipeline, manifest, data_dir, cfg, unc_seed);
    std::printf("%-24s %12s %12s  %s\n", "input", "loglik", "tau", "verdict");
    for (const auto& r : rows) {
      std::printf("%-24s %12.4f %12.4f  %s\n", r.input_id.c_str(), r.loglik,
                  r.tau, to_string(r.verdict).c_str());
    }
    if (!unc_out.empty()) {
      std::ofstream out(unc_out);
      out << "input\tloglik\ttau\tverdict\n";
      char buf[64];
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g\t%.17g", r.loglik, r.tau);
        out << r.input_id << '\t' << buf << '\t' << to_string(r.verdict) << "\n";
      }
      if (!out) throw DataFormatError("failed writing " + unc_out);
    }
    return 0;
  }

  if (expo->parsed()) {
    const RunConfig cfg = build_config(expo_opts);
    const fs::path data_dir = expo_data;
    const DatasetManifest manifest = read_manifest(data_dir / "manifest.tsv");
    TripletPipeline pipeline{network_from_checkpoint(load_checkpoint(expo_ckpt)),
                             load_head(expo_head)};
    const Rng root(expo_seed);
    const auto slices = sample_split_slices(manifest, data_dir, cfg,
                                            split_from_string(expo_split),
                                            root.split(1));
    if (slices.empty()) throw ConfigError("split \"" + expo_split + "\" has no volumes");
    std::ofstream out(expo_out);
    if (!out) throw DataFormatError("cannot open for writing: " + expo_out);
    export_projected_embeddings(out, pipeline, slices);
    std::cout << "wrote " << slices.size() << " projected embeddings to "
              << expo_out << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const StateError& e) {
    std::cerr << "state error: " << e.what() << "\n";
    return 2;
  } catch (const DataFormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

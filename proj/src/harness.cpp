#include "tnet/harness.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "tnet/errors.hpp"
#include "tnet/training.hpp"

namespace tnet {

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::exp1: return "exp1";
    case ExperimentId::exp2: return "exp2";
    case ExperimentId::exp3: return "exp3";
    case ExperimentId::exp4: return "exp4";
  }
  throw ContractViolation("unknown experiment id");
}

ExperimentId experiment_id_from_string(const std::string& s) {
  if (s == "exp1") return ExperimentId::exp1;
  if (s == "exp2") return ExperimentId::exp2;
  if (s == "exp3") return ExperimentId::exp3;
  if (s == "exp4") return ExperimentId::exp4;
  throw ConfigError("unknown experiment id: \"" + s + "\"");
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::triplet: return "triplet";
    case ModelKind::baseline: return "baseline";
    case ModelKind::both: return "both";
  }
  throw ContractViolation("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "triplet") return ModelKind::triplet;
  if (s == "baseline") return ModelKind::baseline;
  if (s == "both") return ModelKind::both;
  throw ConfigError("unknown model kind: \"" + s + "\"");
}

void ExperimentSpec::validate() const {
  noise.validate();
  if (step_budget < 0) throw ConfigError("step budget must be >= 0");
  if (few_shot_limit && *few_shot_limit < 1) {
    throw ConfigError("few-shot limit must be >= 1");
  }
  switch (id) {
    case ExperimentId::exp1:
      if (few_shot_limit) throw ConfigError("exp1 does not take a few-shot limit");
      if (noise.kind != NoiseKind::none) throw ConfigError("exp1 is noise-free");
      if (noise_in_train) throw ConfigError("exp1 does not train with noise");
      break;
    case ExperimentId::exp2:
      if (!few_shot_limit) throw ConfigError("exp2 requires a few-shot limit");
      if (noise.kind != NoiseKind::none) throw ConfigError("exp2 is noise-free");
      if (noise_in_train) throw ConfigError("exp2 does not train with noise");
      break;
    case ExperimentId::exp3:
      if (noise.kind == NoiseKind::none) throw ConfigError("exp3 requires a noise kind");
      if (!noise_in_train) throw ConfigError("exp3 trains with noisy data");
      break;
    case ExperimentId::exp4:
      if (noise.kind == NoiseKind::none) throw ConfigError("exp4 requires a noise kind");
      if (noise_in_train) throw ConfigError("exp4 trains on curated data");
      break;
  }
}

Eigen::MatrixXd embed_slices(const EmbeddingNetwork& net,
                             const std::vector<SliceSample>& slices,
                             int batch_size) {
  if (slices.empty()) throw ContractViolation("embed_slices: no slices");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(slices.size()),
                      net.config.embedding_dim);
  Batch batch;
  std::size_t done = 0;
  while (done < slices.size()) {
    const std::size_t n =
        std::min<std::size_t>(static_cast<std::size_t>(batch_size),
                              slices.size() - done);
    batch.clear();
    for (std::size_t i = 0; i < n; ++i) batch.push_back(slices[done + i].image);
    out.middleRows(static_cast<Eigen::Index>(done), static_cast<Eigen::Index>(n)) =
        forward(net, batch);
    done += n;
  }
  return out;
}

CheckpointData baseline_to_checkpoint(const BaselineModel& model,
                                      const OptimizerState& opt) {
  CheckpointData ck;
  ck.config = model.backbone.config;
  ck.class_names = model.classes;
  ck.opt = opt;
  ck.params = model.backbone.params;
  ck.params.push_back({"head.weight", model.head.weight});
  ck.params.push_back({"head.bias", model.head.bias});
  return ck;
}

BaselineModel baseline_from_checkpoint(const CheckpointData& data) {
  BaselineModel model;
  model.backbone = network_from_checkpoint(data);
  const std::size_t backbone = model.backbone.backbone_tensor_count();
  if (data.params.size() != backbone + 2 ||
      data.params[backbone].name != "head.weight" ||
      data.params[backbone + 1].name != "head.bias") {
    throw DataFormatError("checkpoint has no softmax head tensors");
  }
  model.head.weight = data.params[backbone].value;
  model.head.bias = data.params[backbone + 1].value.col(0);
  if (data.class_names.empty()) {
    throw DataFormatError("baseline checkpoint is missing class names");
  }
  model.classes = data.class_names;
  model.validate();
  return model;
}

namespace {

// Fixed stream ids under the experiment seed.
constexpr std::uint64_t kStreamTrainSlices = 1;
constexpr std::uint64_t kStreamTrainTriplet = 2;
constexpr std::uint64_t kStreamTrainBaseline = 3;
constexpr std::uint64_t kStreamHead = 4;
constexpr std::uint64_t kStreamEval = 5;
constexpr std::uint64_t kStreamDemo = 6;

std::vector<std::pair<std::string, std::string>> snapshot_with_spec(
    const ExperimentSpec& spec, const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("experiment.id", to_string(spec.id));
  out.emplace_back("experiment.few_shot_limit",
                   spec.few_shot_limit ? std::to_string(*spec.few_shot_limit)
                                       : std::string("none"));
  out.emplace_back("experiment.noise_in_train", spec.noise_in_train ? "1" : "0");
  out.emplace_back("experiment.step_budget", std::to_string(spec.step_budget));
  auto cfg_snapshot = cfg.snapshot();
  out.insert(out.end(), cfg_snapshot.begin(), cfg_snapshot.end());
  return out;
}

std::vector<SliceSample> collect_training_slices(const DatasetManifest& manifest,
                                                 const std::filesystem::path& data_dir,
                                                 const RunConfig& cfg, Rng slice_root) {
  std::vector<SliceSample> out;
  for (int idx : manifest.entries_with(Split::train)) {
    const Volume v = load_volume(data_dir, manifest.entries[static_cast<std::size_t>(idx)]);
    Rng r = slice_root.split(static_cast<std::uint64_t>(idx));
    auto s = sample_slices(v, cfg.n_per_axis, cfg.sigma_frac, r);
    out.insert(out.end(), std::make_move_iterator(s.begin()),
               std::make_move_iterator(s.end()));
  }
  return out;
}

void write_report_files(const MetricsReport& report,
                        const std::filesystem::path& out_dir,
                        const std::string& model_name) {
  std::ofstream text(out_dir / ("report_" + model_name + ".txt"));
  write_report_text(report, text);
  std::ofstream records(out_dir / ("report_" + model_name + ".tsv"));
  write_report_records(report, records);
  if (!text || !records) {
    throw DataFormatError("failed writing reports to " + out_dir.string());
  }
}

struct EvalContext {
  const DatasetManifest& manifest;
  const std::filesystem::path& data_dir;
  const RunConfig& cfg;
  const NoiseSpec* test_noise;  // applied to every test slice when set
  Rng eval_root;
};

// Per-volume evaluation streams are split by manifest entry index, so every
// model arm classifies identical slices under identical corruption.
template <typename ClassifyFn>
MetricsReport evaluate_on_test(const EvalContext& ctx, ClassifyFn&& classify) {
  std::vector<int> y_true, y_pred;
  for (int idx : ctx.manifest.entries_with(Split::test)) {
    const auto& entry = ctx.manifest.entries[static_cast<std::size_t>(idx)];
    const Volume v = load_volume(ctx.data_dir, entry);
    Rng er = ctx.eval_root.split(static_cast<std::uint64_t>(idx));
    y_true.push_back(ctx.manifest.class_index(entry.label));
    y_pred.push_back(classify(v, er));
  }
  return compute_metrics(y_true, y_pred, ctx.manifest.classes,
                         ctx.manifest.class_groups);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const DatasetManifest& manifest,
                                const std::filesystem::path& data_dir,
                                const RunConfig& cfg,
                                const std::filesystem::path& out_dir) {
  spec.validate();
  manifest.validate();
  RunConfig ecfg = cfg;
  ecfg.noise = spec.noise;
  ecfg.steps = spec.step_budget;
  ecfg.validate();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataFormatError("cannot create run directory: " + out_dir.string());

  const Rng root(spec.seed);
  std::vector<SliceSample> train_slices = collect_training_slices(
      manifest, data_dir, ecfg, root.split(kStreamTrainSlices));

  if (spec.few_shot_limit) {
    const std::size_t before = train_slices.size();
    train_slices = restrict_few_shot(train_slices, manifest, *spec.few_shot_limit);
    std::cerr << "[" << to_string(spec.id) << "] few-shot restriction: "
              << before << " -> " << train_slices.size() << " training slices\n";
  }
  const SlicePool pool = build_slice_pool(std::move(train_slices), manifest);

  const NoiseSpec* test_noise =
      (spec.id == ExperimentId::exp3 || spec.id == ExperimentId::exp4) ? &ecfg.noise
                                                                       : nullptr;
  const auto snapshot = snapshot_with_spec(spec, ecfg);
  ExperimentResult result;

  if (spec.model == ModelKind::triplet || spec.model == ModelKind::both) {
    Rng train_rng = root.split(kStreamTrainTriplet);
    TrainResult tr = train_triplet(pool, ecfg, spec.noise_in_train, train_rng);
    if (!tr.loss_trace.empty()) {
      std::cerr << "[" << to_string(spec.id) << "] triplet loss: first "
                << tr.loss_trace.front() << ", last " << tr.loss_trace.back() << "\n";
    }

    // Head fitting sees the training slices under the training-time noise
    // policy (per-slice apply_prob), in canonical orientation.
    Rng head_rng = root.split(kStreamHead);
    std::vector<SliceSample> head_slices = pool.slices;
    if (spec.noise_in_train && ecfg.noise.kind != NoiseKind::none) {
      for (auto& s : head_slices) {
        if (head_rng.bernoulli(ecfg.noise.apply_prob)) {
          s.image = corrupt(s.image, ecfg.noise, head_rng);
        }
      }
    }
    const Eigen::MatrixXd emb = embed_slices(tr.net, head_slices, ecfg.batch_size);
    TripletHead head;
    head.projector = pca_fit(emb, ecfg.pca_components);
    const Eigen::MatrixXd z = pca_project(head.projector, emb);
    GmmFitInfo gmm_info;
    head.gmm = gmm_fit(z, pool.num_classes(), head_rng, ecfg.gmm_tol,
                       ecfg.gmm_max_iter, ecfg.gmm_reg, &gmm_info);
    MapClustersResult mapped = map_clusters(head.gmm, z, pool.labels,
                                            pool.num_classes());
    for (const auto& w : mapped.warnings) {
      std::cerr << "[" << to_string(spec.id) << "] " << w << "\n";
    }
    head.label_map = mapped.map;
    head.gate = fit_gate(head.gmm, z, ecfg.gate_percentile);
    head.classes = pool.classes;
    head.class_groups = pool.class_groups;

    TripletPipeline pipeline{std::move(tr.net), std::move(head)};
    CheckpointData ck;
    ck.config = ecfg.net;
    ck.opt = tr.opt;
    ck.params = pipeline.net.params;
    save_checkpoint(ck, out_dir / "checkpoint_triplet.memb");
    save_head(pipeline.head, out_dir / "head_triplet.mhed");

    EvalContext ctx{manifest, data_dir, ecfg, test_noise, root.split(kStreamEval)};
    MetricsReport report = evaluate_on_test(ctx, [&](const Volume& v, Rng& er) {
      return classify_volume(pipeline, v, ecfg.n_per_axis, ecfg.sigma_frac, er,
                             test_noise).label_index;
    });
    report.experiment_id = to_string(spec.id);
    report.model_name = "triplet";
    report.seed = spec.seed;
    report.config_snapshot = snapshot;
    write_report_files(report, out_dir, "triplet");
    result.triplet = std::move(report);
  }

  if (spec.model == ModelKind::baseline || spec.model == ModelKind::both) {
    Rng train_rng = root.split(kStreamTrainBaseline);
    BaselineTrainResult br = train_baseline(pool, ecfg, spec.noise_in_train, train_rng);
    if (!br.loss_trace.empty()) {
      std::cerr << "[" << to_string(spec.id) << "] baseline loss: first "
                << br.loss_trace.front() << ", last " << br.loss_trace.back() << "\n";
    }
    save_checkpoint(baseline_to_checkpoint(br.model, br.opt),
                    out_dir / "checkpoint_baseline.memb");

    EvalContext ctx{manifest, data_dir, ecfg, test_noise, root.split(kStreamEval)};
    MetricsReport report = evaluate_on_test(ctx, [&](const Volume& v, Rng& er) {
      return classify_volume_baseline(br.model, v, ecfg.n_per_axis,
                                      ecfg.sigma_frac, er, test_noise).label_index;
    });
    report.experiment_id = to_string(spec.id);
    report.model_name = "baseline";
    report.seed = spec.seed;
    report.config_snapshot = snapshot;
    write_report_files(report, out_dir, "baseline");
    result.baseline = std::move(report);
  }
  return result;
}

namespace {

Volume make_sphere_mask_volume(int dim, Rng& rng) {
  Volume v;
  v.id = "oos_binary_mask";
  v.nx = v.ny = v.nz = dim;
  v.voxels.resize(static_cast<std::size_t>(dim) * dim * dim);
  const double cx = 0.35 + 0.3 * rng.next_double();
  const double cy = 0.35 + 0.3 * rng.next_double();
  const double cz = 0.35 + 0.3 * rng.next_double();
  const double radius = 0.18 + 0.12 * rng.next_double();
  std::size_t at = 0;
  for (int z = 0; z < dim; ++z) {
    for (int y = 0; y < dim; ++y) {
      for (int x = 0; x < dim; ++x) {
        const double dx = (x + 0.5) / dim - cx;
        const double dy = (y + 0.5) / dim - cy;
        const double dz = (z + 0.5) / dim - cz;
        v.voxels[at++] =
            std::sqrt(dx * dx + dy * dy + dz * dz) < radius ? 1.0f : 0.0f;
      }
    }
  }
  return v;
}

Volume make_constant_volume(int dim) {
  Volume v;
  v.id = "oos_constant";
  v.nx = v.ny = v.nz = dim;
  v.voxels.assign(static_cast<std::size_t>(dim) * dim * dim, 0.5f);
  return v;
}

Volume make_uniform_noise_volume(int dim, Rng& rng) {
  Volume v;
  v.id = "oos_uniform_noise";
  v.nx = v.ny = v.nz = dim;
  v.voxels.resize(static_cast<std::size_t>(dim) * dim * dim);
  for (auto& x : v.voxels) x = static_cast<float>(rng.next_double());
  return v;
}

}  // namespace

std::vector<UncertaintyRow> run_uncertainty_demo(const TripletPipeline& pipeline,
                                                 const DatasetManifest& manifest,
                                                 const std::filesystem::path& data_dir,
                                                 const RunConfig& cfg,
                                                 std::uint64_t seed) {
  pipeline.head.validate();
  const auto test_entries = manifest.entries_with(Split::test);
  if (test_entries.empty()) throw ConfigError("uncertainty demo needs a test volume");
  const Rng root = Rng(seed).split(kStreamDemo);

  std::vector<std::pair<std::string, Volume>> inputs;
  {
    const Volume held_out = load_volume(
        data_dir, manifest.entries[static_cast<std::size_t>(test_entries.front())]);
    inputs.emplace_back("test:" + held_out.id, held_out);
    Rng gen = root.split(1);
    inputs.emplace_back("oos:binary_mask", make_sphere_mask_volume(cfg.data.dim, gen));
    inputs.emplace_back("oos:constant", make_constant_volume(cfg.data.dim));
    Rng gen2 = root.split(2);
    inputs.emplace_back("oos:uniform_noise",
                        make_uniform_noise_volume(cfg.data.dim, gen2));
  }

  std::vector<UncertaintyRow> rows;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Rng er = root.split(100 + i);
    const VolumeClassification c = classify_volume(
        pipeline, inputs[i].second, cfg.n_per_axis, cfg.sigma_frac, er);
    UncertaintyRow row;
    row.input_id = inputs[i].first;
    row.loglik = c.mean_loglik;
    row.tau = pipeline.head.gate.tau;
    row.verdict = gate_sample(pipeline.head.gate, c.mean_loglik);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace tnet

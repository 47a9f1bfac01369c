#include "tnet/checkpoint.hpp"

#include "tnet/binary_io.hpp"
#include "tnet/errors.hpp"

namespace tnet {

namespace {

constexpr char kMagic[4] = {'M', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

void write_tensor(BinaryWriter& w, const std::string& name,
                  const Eigen::MatrixXd& m) {
  w.str(name);
  w.u32(2);  // rank
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
  }
}

Tensor read_tensor(BinaryReader& r) {
  Tensor t;
  t.name = r.str(4096);
  const std::uint32_t rank = r.u32();
  if (rank != 2) r.fail("unsupported tensor rank " + std::to_string(rank));
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 28)) {
    r.fail("tensor too large");
  }
  t.value.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) t.value(i, j) = r.f64();
  }
  return t;
}

}  // namespace

void save_checkpoint(const CheckpointData& data, const std::filesystem::path& path) {
  if (data.opt.velocity.size() != data.params.size()) {
    throw ContractViolation("save_checkpoint: velocity/param count mismatch");
  }
  BinaryWriter w(path);
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(data.config.input_h));
  w.u32(static_cast<std::uint32_t>(data.config.input_w));
  w.u32(static_cast<std::uint32_t>(data.config.filters.size()));
  for (int f : data.config.filters) w.u32(static_cast<std::uint32_t>(f));
  w.u32(static_cast<std::uint32_t>(data.config.embedding_dim));
  w.u32(static_cast<std::uint32_t>(data.class_names.size()));
  for (const auto& name : data.class_names) w.str(name);
  w.f64(data.opt.base_lr);
  w.f64(data.opt.momentum);
  w.f64(data.opt.decay_rate);
  w.u32(static_cast<std::uint32_t>(data.opt.decay_steps));
  w.f64(data.opt.l2_weight);
  w.f64(data.opt.l1_weight);
  w.u64(data.opt.step);
  w.u32(static_cast<std::uint32_t>(2 * data.params.size()));
  for (const auto& p : data.params) write_tensor(w, p.name, p.value);
  for (std::size_t i = 0; i < data.params.size(); ++i) {
    write_tensor(w, "vel." + data.params[i].name, data.opt.velocity[i]);
  }
  w.close();
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointData data;
  data.config.input_h = static_cast<int>(r.u32());
  data.config.input_w = static_cast<int>(r.u32());
  const std::uint32_t nblocks = r.u32();
  if (nblocks == 0 || nblocks > 16) r.fail("implausible block count");
  data.config.filters.clear();
  for (std::uint32_t i = 0; i < nblocks; ++i) {
    data.config.filters.push_back(static_cast<int>(r.u32()));
  }
  data.config.embedding_dim = static_cast<int>(r.u32());
  const std::uint32_t nclasses = r.u32();
  if (nclasses > 4096) r.fail("implausible class count");
  for (std::uint32_t i = 0; i < nclasses; ++i) data.class_names.push_back(r.str(4096));
  data.opt.base_lr = r.f64();
  data.opt.momentum = r.f64();
  data.opt.decay_rate = r.f64();
  data.opt.decay_steps = static_cast<int>(r.u32());
  data.opt.l2_weight = r.f64();
  data.opt.l1_weight = r.f64();
  data.opt.step = r.u64();

  const std::uint32_t tensor_count = r.u32();
  if (tensor_count % 2 != 0) r.fail("tensor count must pair params with velocities");
  const std::uint32_t n_params = tensor_count / 2;
  for (std::uint32_t i = 0; i < n_params; ++i) data.params.push_back(read_tensor(r));
  for (std::uint32_t i = 0; i < n_params; ++i) {
    Tensor v = read_tensor(r);
    const std::string expected = "vel." + data.params[i].name;
    if (v.name != expected) {
      r.fail("velocity tensor \"" + v.name + "\", expected \"" + expected + "\"");
    }
    if (v.value.rows() != data.params[i].value.rows() ||
        v.value.cols() != data.params[i].value.cols()) {
      r.fail("velocity shape mismatch for " + data.params[i].name);
    }
    data.opt.velocity.push_back(std::move(v.value));
  }
  r.expect_eof();
  return data;
}

EmbeddingNetwork network_from_checkpoint(const CheckpointData& data) {
  data.config.validate();
  EmbeddingNetwork net;
  net.config = data.config;
  const std::size_t backbone =
      2 * static_cast<std::size_t>(data.config.num_blocks()) + 2;
  if (data.params.size() < backbone) {
    throw DataFormatError("checkpoint is missing backbone tensors");
  }
  net.params.assign(data.params.begin(),
                    data.params.begin() + static_cast<std::ptrdiff_t>(backbone));
  // Sanity-check naming and shapes against the config.
  int cin = 1;
  for (int blk = 0; blk < data.config.num_blocks(); ++blk) {
    const int cout = data.config.filters[static_cast<std::size_t>(blk)];
    const auto& wt = net.params[2 * static_cast<std::size_t>(blk)];
    const auto& bt = net.params[2 * static_cast<std::size_t>(blk) + 1];
    if (wt.name != "conv" + std::to_string(blk) + ".weight" ||
        wt.value.rows() != cout || wt.value.cols() != cin * 9 ||
        bt.value.rows() != cout || bt.value.cols() != 1) {
      throw DataFormatError("checkpoint backbone tensor mismatch at block " +
                            std::to_string(blk));
    }
    cin = cout;
  }
  if (net.dense_weight().rows() != data.config.embedding_dim ||
      net.dense_weight().cols() != cin) {
    throw DataFormatError("checkpoint dense tensor mismatch");
  }
  return net;
}

}  // namespace tnet

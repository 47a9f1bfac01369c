#include "tnet/network.hpp"

#include <cmath>

#include "tnet/errors.hpp"

namespace tnet {

void NetworkConfig::validate() const {
  if (embedding_dim < 2) throw ContractViolation("embedding_dim must be >= 2");
  if (filters.empty()) throw ContractViolation("need at least one conv block");
  for (int f : filters) {
    if (f < 1) throw ContractViolation("filter counts must be >= 1");
  }
  const int pf = pool_factor();
  if (input_h < pf || input_w < pf || input_h % pf != 0 || input_w % pf != 0) {
    throw ContractViolation("input size must be divisible by cumulative pooling");
  }
}

std::size_t EmbeddingNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params) n += static_cast<std::size_t>(t.value.size());
  return n;
}

EmbeddingNetwork EmbeddingNetwork::init(const NetworkConfig& config, Rng& rng) {
  config.validate();
  EmbeddingNetwork net;
  net.config = config;
  int cin = 1;
  for (int b = 0; b < config.num_blocks(); ++b) {
    const int cout = config.filters[static_cast<std::size_t>(b)];
    const double scale = std::sqrt(2.0 / (cin * 9));
    Eigen::MatrixXd w(cout, cin * 9);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.next_gaussian();
    net.params.push_back({"conv" + std::to_string(b) + ".weight", std::move(w)});
    net.params.push_back({"conv" + std::to_string(b) + ".bias",
                          Eigen::MatrixXd::Zero(cout, 1)});
    cin = cout;
  }
  const double scale = std::sqrt(1.0 / cin);
  Eigen::MatrixXd w(config.embedding_dim, cin);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.next_gaussian();
  net.params.push_back({"dense.weight", std::move(w)});
  net.params.push_back({"dense.bias",
                        Eigen::MatrixXd::Zero(config.embedding_dim, 1)});
  return net;
}

namespace {

// Patch matrix for a 3x3 same-padded convolution over a batch of feature
// maps laid out as (C x B*H*W), column index b*H*W + y*W + x.
void im2col(const Eigen::MatrixXd& in, int batch, int h, int w,
            Eigen::MatrixXd& patches) {
  const auto cin = in.rows();
  const Eigen::Index s = static_cast<Eigen::Index>(h) * w;
  patches.resize(cin * 9, static_cast<Eigen::Index>(batch) * s);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * s;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Index col = base + static_cast<Eigen::Index>(y) * w + x;
        double* dst = patches.data() + col * patches.rows();
        for (int ky = 0; ky < 3; ++ky) {
          const int yy = y + ky - 1;
          for (int kx = 0; kx < 3; ++kx) {
            const int xx = x + kx - 1;
            const Eigen::Index off = static_cast<Eigen::Index>(ky * 3 + kx) * cin;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) {
              for (Eigen::Index c = 0; c < cin; ++c) dst[off + c] = 0.0;
            } else {
              const double* src =
                  in.data() + (base + static_cast<Eigen::Index>(yy) * w + xx) * cin;
              for (Eigen::Index c = 0; c < cin; ++c) dst[off + c] = src[c];
            }
          }
        }
      }
    }
  }
}

// Scatter-add of patch gradients back onto the input layout; inverse of
// im2col up to summation of overlaps.
void col2im(const Eigen::MatrixXd& patches, int batch, int h, int w,
            Eigen::MatrixXd& grad_in) {
  const Eigen::Index cin = patches.rows() / 9;
  const Eigen::Index s = static_cast<Eigen::Index>(h) * w;
  grad_in.setZero(cin, static_cast<Eigen::Index>(batch) * s);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * s;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Index col = base + static_cast<Eigen::Index>(y) * w + x;
        const double* src = patches.data() + col * patches.rows();
        for (int ky = 0; ky < 3; ++ky) {
          const int yy = y + ky - 1;
          if (yy < 0 || yy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int xx = x + kx - 1;
            if (xx < 0 || xx >= w) continue;
            const Eigen::Index off = static_cast<Eigen::Index>(ky * 3 + kx) * cin;
            double* dst =
                grad_in.data() + (base + static_cast<Eigen::Index>(yy) * w + xx) * cin;
            for (Eigen::Index c = 0; c < cin; ++c) dst[c] += src[off + c];
          }
        }
      }
    }
  }
}

// 2x2 stride-2 max pool; records the source column of each maximum (ties go
// to the first cell in scan order, keeping backward deterministic).
void maxpool(const Eigen::MatrixXd& in, int batch, int h, int w,
             Eigen::MatrixXd& out, Eigen::MatrixXi& argmax) {
  const auto c = in.rows();
  const int ho = h / 2, wo = w / 2;
  const Eigen::Index s = static_cast<Eigen::Index>(h) * w;
  const Eigen::Index so = static_cast<Eigen::Index>(ho) * wo;
  out.resize(c, static_cast<Eigen::Index>(batch) * so);
  argmax.resize(c, static_cast<Eigen::Index>(batch) * so);
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Eigen::Index ocol =
            static_cast<Eigen::Index>(b) * so + static_cast<Eigen::Index>(oy) * wo + ox;
        double* od = out.data() + ocol * c;
        int* ad = argmax.data() + ocol * c;
        bool first = true;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const Eigen::Index icol = static_cast<Eigen::Index>(b) * s +
                                      static_cast<Eigen::Index>(2 * oy + dy) * w +
                                      (2 * ox + dx);
            const double* id = in.data() + icol * c;
            if (first) {
              for (Eigen::Index ch = 0; ch < c; ++ch) {
                od[ch] = id[ch];
                ad[ch] = static_cast<int>(icol);
              }
              first = false;
            } else {
              for (Eigen::Index ch = 0; ch < c; ++ch) {
                if (id[ch] > od[ch]) {
                  od[ch] = id[ch];
                  ad[ch] = static_cast<int>(icol);
                }
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd forward(const EmbeddingNetwork& net, const Batch& batch,
                        ForwardCache* cache) {
  const NetworkConfig& cfg = net.config;
  if (batch.empty()) throw ContractViolation("forward: empty batch");
  for (const auto& img : batch) {
    if (img.rows() != cfg.input_h || img.cols() != cfg.input_w) {
      throw ContractViolation("forward: image does not match config input size");
    }
  }
  const int b = static_cast<int>(batch.size());
  const int nblocks = cfg.num_blocks();

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.net = &net;
  c.revision = net.revision;
  c.batch = b;
  c.blocks.resize(static_cast<std::size_t>(nblocks));

  // Input as (1 x B*H*W), column b*H*W + y*W + x.
  int h = cfg.input_h, w = cfg.input_w;
  Eigen::MatrixXd act(1, static_cast<Eigen::Index>(b) * h * w);
  for (int i = 0; i < b; ++i) {
    const Eigen::MatrixXd& img = batch[static_cast<std::size_t>(i)];
    double* dst = act.data() + static_cast<Eigen::Index>(i) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) dst[static_cast<Eigen::Index>(y) * w + x] = img(y, x);
  }

  Eigen::MatrixXd pooled;
  for (int blk = 0; blk < nblocks; ++blk) {
    BlockCache& bc = c.blocks[static_cast<std::size_t>(blk)];
    bc.h = h;
    bc.w = w;
    im2col(blk == 0 ? act : pooled, b, h, w, bc.patches);
    bc.post_relu.resize(net.conv_weight(blk).rows(), bc.patches.cols());
    bc.post_relu.noalias() = net.conv_weight(blk) * bc.patches;
    bc.post_relu.colwise() += net.conv_bias(blk).col(0);
    bc.post_relu = bc.post_relu.cwiseMax(0.0);
    maxpool(bc.post_relu, b, h, w, pooled, bc.pool_argmax);
    h /= 2;
    w /= 2;
  }

  const Eigen::Index s_last = static_cast<Eigen::Index>(h) * w;
  c.features.resize(pooled.rows(), b);
  for (int i = 0; i < b; ++i) {
    c.features.col(i) =
        pooled.middleCols(static_cast<Eigen::Index>(i) * s_last, s_last).rowwise().sum() /
        static_cast<double>(s_last);
  }

  Eigen::MatrixXd emb(net.dense_weight().rows(), b);
  emb.noalias() = net.dense_weight() * c.features;
  emb.colwise() += net.dense_bias().col(0);
  return emb.transpose();
}

Gradients backward(const EmbeddingNetwork& net, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& grad_embeddings,
                   double l2_weight, double l1_weight) {
  if (cache.net != &net || cache.revision != net.revision) {
    throw ContractViolation("backward: stale forward cache");
  }
  const NetworkConfig& cfg = net.config;
  const int b = cache.batch;
  if (grad_embeddings.rows() != b || grad_embeddings.cols() != cfg.embedding_dim) {
    throw ContractViolation("backward: grad_embeddings shape mismatch");
  }

  Gradients grads(net.params.size());
  const int nblocks = cfg.num_blocks();

  const Eigen::MatrixXd ge = grad_embeddings.transpose();  // D x B
  const std::size_t dense_idx = 2 * static_cast<std::size_t>(nblocks);
  grads[dense_idx].noalias() = ge * cache.features.transpose();
  grads[dense_idx + 1] = ge.rowwise().sum();
  Eigen::MatrixXd gfeat = net.dense_weight().transpose() * ge;  // C_last x B

  // Spread the GAP gradient uniformly over the last pooled map.
  const int h_last = cfg.input_h / cfg.pool_factor();
  const int w_last = cfg.input_w / cfg.pool_factor();
  const Eigen::Index s_last = static_cast<Eigen::Index>(h_last) * w_last;
  Eigen::MatrixXd gpooled(gfeat.rows(), static_cast<Eigen::Index>(b) * s_last);
  for (int i = 0; i < b; ++i) {
    gpooled.middleCols(static_cast<Eigen::Index>(i) * s_last, s_last).colwise() =
        gfeat.col(i) / static_cast<double>(s_last);
  }

  Eigen::MatrixXd gz, gpatches;
  for (int blk = nblocks - 1; blk >= 0; --blk) {
    const BlockCache& bc = cache.blocks[static_cast<std::size_t>(blk)];
    // Unpool: route each pooled gradient to the max's source column.
    gz.setZero(bc.post_relu.rows(), bc.post_relu.cols());
    for (Eigen::Index j = 0; j < gpooled.cols(); ++j) {
      const double* src = gpooled.data() + j * gpooled.rows();
      const int* am = bc.pool_argmax.data() + j * bc.pool_argmax.rows();
      for (Eigen::Index ch = 0; ch < gz.rows(); ++ch) {
        gz(ch, am[ch]) += src[ch];
      }
    }
    // ReLU subgradient (0 at 0).
    gz = (bc.post_relu.array() > 0.0).select(gz, 0.0);

    grads[2 * static_cast<std::size_t>(blk)].noalias() = gz * bc.patches.transpose();
    grads[2 * static_cast<std::size_t>(blk) + 1] = gz.rowwise().sum();
    if (blk > 0) {
      gpatches.resize(net.conv_weight(blk).cols(), gz.cols());
      gpatches.noalias() = net.conv_weight(blk).transpose() * gz;
      col2im(gpatches, b, bc.h, bc.w, gpooled);
    }
  }

  // Any extra (head) tensors appended after the backbone get a zero loss
  // gradient here; trainers add their own terms on top.
  for (std::size_t i = net.backbone_tensor_count(); i < net.params.size(); ++i) {
    grads[i] = Eigen::MatrixXd::Zero(net.params[i].value.rows(),
                                     net.params[i].value.cols());
  }
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    const Eigen::MatrixXd& p = net.params[i].value;
    grads[i] += l2_weight * 2.0 * p +
                l1_weight * p.unaryExpr([](double x) {
                  return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                });
  }
  return grads;
}

}  // namespace tnet

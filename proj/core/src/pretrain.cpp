#include "ssgait/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ssgait/errors.hpp"

namespace ssgait {

void ProjectionParams::init(int n, int d1, int d2, const Rng& rng,
                            const std::string& prefix) {
  w = Param(prefix + ".w", {d2, d1});
  b = Param(prefix + ".b", {d2});
  gamma = Param(prefix + ".bn.gamma", {n * d2});
  beta = Param(prefix + ".bn.beta", {n * d2});
  gamma.value.fill(1.0);
  run_mean = Tensor({n * d2});
  run_var = Tensor({n * d2});
  run_var.fill(1.0);
  Rng r = rng.stream(w.name);
  const double std = std::sqrt(2.0 / d1);
  for (std::int64_t i = 0; i < w.value.size(); ++i) w.value[i] = std * r.normal();
}

void PredictionParams::init(int d2, const Rng& rng) {
  w = Param("pred.w", {d2, d2});
  b = Param("pred.b", {d2});
  Rng r = rng.stream(w.name);
  const double std = std::sqrt(2.0 / d2);
  for (std::int64_t i = 0; i < w.value.size(); ++i) w.value[i] = std * r.normal();
}

void OnlineNetwork::init(const BackboneConfig& bb_cfg, int d2_, const Rng& rng) {
  if (d2_ < 1) throw std::invalid_argument("d2 must be positive");
  cfg = bb_cfg;
  cfg.validate();
  d2 = d2_;
  backbone.init(cfg, rng);
  proj.init(cfg.n_stripes(), cfg.embed_dim, d2, rng, "proj");
  pred.init(d2, rng);
}

std::vector<Param*> OnlineNetwork::trainable() {
  std::vector<Param*> out = backbone.active(cfg);
  for (Param* p : proj.learnable()) out.push_back(p);
  out.push_back(&pred.w);
  out.push_back(&pred.b);
  return out;
}

void TargetNetwork::init_from(const OnlineNetwork& online) {
  encoder = online.backbone;
  proj = online.proj;
}

namespace {

// Encoder + spatial-head blocks: the slice of the backbone the target branch
// actually runs (its temporal blocks and output maps are never touched).
std::vector<Param*> encoder_blocks(BackboneParams& p, const BackboneConfig& cfg) {
  std::vector<Param*> out = {&p.c1w, &p.c1b, &p.c2w, &p.c2b, &p.c3w, &p.c3b};
  if (cfg.ablation == Ablation::NoHpm) {
    for (Param* q : {&p.p1w, &p.p1b, &p.p2w, &p.p2b, &p.p3w, &p.p3b, &p.pfw, &p.pfb}) {
      out.push_back(q);
    }
  } else {
    for (size_t i = 0; i < p.hpm_w.size(); ++i) {
      out.push_back(&p.hpm_w[i]);
      out.push_back(&p.hpm_b[i]);
    }
  }
  return out;
}

void ema_blend(Tensor& dst, const Tensor& src, double tau) {
  require_same_shape(dst, src, "ema");
  double* d = dst.data();
  const double* s = src.data();
  for (std::int64_t i = 0; i < dst.size(); ++i) d[i] = tau * d[i] + (1.0 - tau) * s[i];
}

}  // namespace

void ema_update(TargetNetwork& target, const OnlineNetwork& online, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("EMA momentum must lie in [0,1]");
  }
  auto dst = encoder_blocks(target.encoder, online.cfg);
  auto src = encoder_blocks(const_cast<OnlineNetwork&>(online).backbone, online.cfg);
  for (size_t i = 0; i < dst.size(); ++i) ema_blend(dst[i]->value, src[i]->value, tau);
  ema_blend(target.proj.w.value, online.proj.w.value, tau);
  ema_blend(target.proj.b.value, online.proj.b.value, tau);
  ema_blend(target.proj.gamma.value, online.proj.gamma.value, tau);
  ema_blend(target.proj.beta.value, online.proj.beta.value, tau);
  target.proj.run_mean = online.proj.run_mean;
  target.proj.run_var = online.proj.run_var;
}

double cosine_loss(const Tensor& y_on, const Tensor& y_tar) {
  require_same_shape(y_on, y_tar, "cosine loss");
  const int n = y_on.dim(0), d = y_on.dim(1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (int j = 0; j < d; ++j) {
      const double a = y_on(i, j), b = y_tar(i, j);
      aa += a * a;
      bb += b * b;
      ab += a * b;
    }
    const double na = std::sqrt(aa), nb = std::sqrt(bb);
    if (na < 1e-12 || nb < 1e-12) {
      throw DegenerateNorm("stripe " + std::to_string(i) +
                           " feature norm vanished (row norms " + std::to_string(na) +
                           ", " + std::to_string(nb) + ")");
    }
    s += ab / (na * nb);
  }
  return -s / n;
}

double cosine_loss_backward(const Tensor& y_on, const Tensor& y_tar, Tensor& g_on,
                            double scale) {
  require_same_shape(y_on, y_tar, "cosine loss");
  require_same_shape(y_on, g_on, "cosine loss grad");
  const int n = y_on.dim(0), d = y_on.dim(1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (int j = 0; j < d; ++j) {
      const double a = y_on(i, j), b = y_tar(i, j);
      aa += a * a;
      bb += b * b;
      ab += a * b;
    }
    const double na = std::sqrt(aa), nb = std::sqrt(bb);
    if (na < 1e-12 || nb < 1e-12) {
      throw DegenerateNorm("stripe " + std::to_string(i) + " feature norm vanished");
    }
    const double cosi = ab / (na * nb);
    s += cosi;
    const double k1 = 1.0 / (na * nb), k2 = cosi / aa;
    const double f = -scale / n;
    for (int j = 0; j < d; ++j) {
      g_on(i, j) += f * (y_tar(i, j) * k1 - y_on(i, j) * k2);
    }
  }
  return -s / n;
}

namespace {

struct OnlineBatchTrace {
  std::vector<BackboneTrace> bb;
  std::vector<Tensor> u;  // per sample, [n,d1]
  Tensor act;             // [B, n*d2] post-ReLU conv outputs
  Tensor y_bn;            // [B, n*d2] post-BN
  BnTrace bn;
  Tensor y_on;            // [B, n*d2]
  bool used_bn = true;
};

// Shared conv(k=1)+activation step of both projection heads. The rectifier is
// leaky so no unit can go silent across a whole batch: the following batch
// norm then guarantees nonzero spread in every output dimension, which is the
// property the anti-collapse sentinel checks.
void proj_conv_relu(const std::vector<Tensor>& u, const ProjectionParams& proj, int n,
                    int d2, double alpha, Tensor& act) {
  const int B = static_cast<int>(u.size());
  act = Tensor({B, n * d2});
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < n; ++i) {
      linear_forward(proj.w.value, proj.b.value, u[static_cast<size_t>(b)].row(i),
                     act.row(b) + static_cast<std::int64_t>(i) * d2);
    }
  }
  double* p = act.data();
  for (std::int64_t i = 0; i < act.size(); ++i) {
    if (p[i] < 0.0) p[i] *= alpha;
  }
}

void online_batch_forward_impl(const std::vector<const std::vector<Silhouette>*>& frames,
                               OnlineNetwork& online, const PretrainConfig& cfg,
                               const PretrainStepOptions& opts, bool want_grads,
                               OnlineBatchTrace& tr) {
  const int B = static_cast<int>(frames.size());
  const int n = online.cfg.n_stripes(), d2 = online.d2;
  tr.bb.assign(want_grads ? static_cast<size_t>(B) : 0, BackboneTrace{});
  tr.u.resize(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    tr.u[static_cast<size_t>(b)] =
        backbone_forward(*frames[static_cast<size_t>(b)], online.cfg, online.backbone,
                         want_grads ? &tr.bb[static_cast<size_t>(b)] : nullptr);
  }
  proj_conv_relu(tr.u, online.proj, n, d2, online.cfg.lrelu_alpha, tr.act);
  tr.used_bn = opts.use_bn;
  if (opts.use_bn) {
    bn_forward_train(tr.act, online.proj.gamma.value, online.proj.beta.value, cfg.bn_eps,
                     cfg.bn_momentum, online.proj.run_mean, online.proj.run_var, tr.y_bn,
                     want_grads ? &tr.bn : nullptr);
  } else {
    tr.y_bn = tr.act;
  }
  tr.y_on = Tensor({B, n * d2});
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < n; ++i) {
      linear_forward(online.pred.w.value, online.pred.b.value, &tr.y_bn(b, i * d2),
                     &tr.y_on(b, i * d2));
    }
  }
}

}  // namespace

Tensor online_forward_batch(const std::vector<const std::vector<Silhouette>*>& frames,
                            OnlineNetwork& online, const PretrainConfig& cfg) {
  OnlineBatchTrace tr;
  online_batch_forward_impl(frames, online, cfg, PretrainStepOptions{}, false, tr);
  return tr.y_on;
}

Tensor target_forward_batch(const std::vector<const Silhouette*>& frames,
                            const TargetNetwork& target, const OnlineNetwork& online,
                            const PretrainConfig& cfg, const PretrainStepOptions& opts) {
  const int B = static_cast<int>(frames.size());
  const int n = online.cfg.n_stripes(), d2 = online.d2;
  const BackboneParams& bins = opts.share_bins ? online.backbone : target.encoder;
  std::vector<Tensor> z(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    Tensor fm = cnn_encode(*frames[static_cast<size_t>(b)], online.cfg, target.encoder,
                           nullptr);
    Tensor rows = spatial_forward(fm, online.cfg, target.encoder, nullptr);
    z[static_cast<size_t>(b)] = fc_bins_apply(rows, bins);
  }
  Tensor act;
  proj_conv_relu(z, target.proj, n, d2, online.cfg.lrelu_alpha, act);
  if (!opts.use_bn) return act;
  Tensor y;
  Tensor rm = target.proj.run_mean, rv = target.proj.run_var;  // scratch: not tracked
  bn_forward_train(act, target.proj.gamma.value, target.proj.beta.value, cfg.bn_eps,
                   cfg.bn_momentum, rm, rv, y, nullptr);
  return y;
}

Tensor online_forward_eval(const std::vector<Silhouette>& frames,
                           const OnlineNetwork& online, const PretrainConfig& cfg) {
  const int n = online.cfg.n_stripes(), d2 = online.d2;
  std::vector<Tensor> u(1);
  u[0] = backbone_forward(frames, online.cfg, online.backbone, nullptr);
  Tensor act;
  proj_conv_relu(u, online.proj, n, d2, online.cfg.lrelu_alpha, act);
  Tensor y;
  bn_forward_eval(act, online.proj.gamma.value, online.proj.beta.value, cfg.bn_eps,
                  online.proj.run_mean, online.proj.run_var, y);
  Tensor out({n, d2});
  for (int i = 0; i < n; ++i) {
    linear_forward(online.pred.w.value, online.pred.b.value,
                   y.row(0) + static_cast<std::int64_t>(i) * d2, out.row(i));
  }
  return out;
}

Tensor target_forward_eval(const Silhouette& frame, const TargetNetwork& target,
                           const OnlineNetwork& online, const PretrainConfig& cfg) {
  const int n = online.cfg.n_stripes(), d2 = online.d2;
  Tensor fm = cnn_encode(frame, online.cfg, target.encoder, nullptr);
  Tensor rows = spatial_forward(fm, online.cfg, target.encoder, nullptr);
  std::vector<Tensor> z(1);
  z[0] = fc_bins_apply(rows, online.backbone);
  Tensor act;
  proj_conv_relu(z, target.proj, n, d2, online.cfg.lrelu_alpha, act);
  Tensor y;
  bn_forward_eval(act, target.proj.gamma.value, target.proj.beta.value, cfg.bn_eps,
                  target.proj.run_mean, target.proj.run_var, y);
  Tensor out({n, d2});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d2; ++j) out(i, j) = y(0, i * d2 + j);
  }
  return out;
}

StepStats pretrain_step(const PretextBatch& batch, OnlineNetwork& online,
                        TargetNetwork& target, Adam& opt, const PretrainConfig& cfg,
                        const PretrainStepOptions& opts) {
  const int B = static_cast<int>(batch.samples.size());
  if (B < 2) throw DegenerateBatch("pre-training batch needs >= 2 samples");
  const int n = online.cfg.n_stripes(), d2 = online.d2;

  std::vector<const std::vector<Silhouette>*> on_frames;
  std::vector<const Silhouette*> tar_frames;
  on_frames.reserve(static_cast<size_t>(B));
  tar_frames.reserve(static_cast<size_t>(B));
  for (const PretextSample& s : batch.samples) {
    on_frames.push_back(&s.online);
    tar_frames.push_back(&s.target);
  }

  OnlineBatchTrace tr;
  online_batch_forward_impl(on_frames, online, cfg, opts, true, tr);
  const Tensor y_tar = target_forward_batch(tar_frames, target, online, cfg, opts);

  // Loss and gradient w.r.t. the online outputs. The target side is a
  // constant: no gradient flows through y_tar.
  StepStats stats;
  Tensor g_yon({B, n * d2});
  {
    Tensor yo({n, d2}), yt({n, d2}), gr({n, d2});
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d2; ++j) {
          yo(i, j) = tr.y_on(b, i * d2 + j);
          yt(i, j) = y_tar(b, i * d2 + j);
        }
      }
      gr.zero();
      loss += cosine_loss_backward(yo, yt, gr, 1.0 / B);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d2; ++j) g_yon(b, i * d2 + j) = gr(i, j);
      }
    }
    stats.loss = loss / B;
  }
  if (!std::isfinite(stats.loss)) {
    throw NonFiniteLoss("pre-training loss is not finite");
  }
  stats.mean_cosine = -stats.loss;

  // Across-batch std of every target feature dimension (collapse telemetry).
  {
    double min_std = std::numeric_limits<double>::infinity();
    for (int col = 0; col < n * d2; ++col) {
      double mean = 0.0;
      for (int b = 0; b < B; ++b) mean += y_tar(b, col);
      mean /= B;
      double var = 0.0;
      for (int b = 0; b < B; ++b) {
        const double d = y_tar(b, col) - mean;
        var += d * d;
      }
      min_std = std::min(min_std, std::sqrt(var / B));
    }
    stats.y_tar_std_min = min_std;
  }

  // Backward through prediction, BN, ReLU, projection conv, backbone.
  std::vector<Param*> params = online.trainable();
  for (Param* p : params) p->zero_grad();

  Tensor g_ybn({B, n * d2});
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < n; ++i) {
      linear_backward(online.pred.w.value, &tr.y_bn(b, i * d2), &g_yon(b, i * d2),
                      online.pred.w.grad, online.pred.b.grad, &g_ybn(b, i * d2));
    }
  }

  Tensor g_act({B, n * d2});
  if (tr.used_bn) {
    bn_backward(tr.bn, online.proj.gamma.value, g_ybn, g_act, online.proj.gamma.grad,
                online.proj.beta.grad);
  } else {
    g_act = std::move(g_ybn);
  }
  lrelu_backward_inplace(tr.act, g_act, online.cfg.lrelu_alpha);

  Tensor g_u({n, online.cfg.embed_dim});
  for (int b = 0; b < B; ++b) {
    g_u.zero();
    for (int i = 0; i < n; ++i) {
      linear_backward(online.proj.w.value, tr.u[static_cast<size_t>(b)].row(i),
                      g_act.row(b) + static_cast<std::int64_t>(i) * d2,
                      online.proj.w.grad, online.proj.b.grad, g_u.row(i));
    }
    backbone_backward(tr.bb[static_cast<size_t>(b)], online.cfg, g_u, online.backbone);
  }

  opt.step(params);
  ema_update(target, online, cfg.tau);
  return stats;
}

}  // namespace ssgait

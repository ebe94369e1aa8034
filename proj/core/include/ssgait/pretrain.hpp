#pragma once

#include <vector>

#include "ssgait/adam.hpp"
#include "ssgait/backbone.hpp"
#include "ssgait/layers.hpp"
#include "ssgait/rng.hpp"
#include "ssgait/sampling.hpp"
#include "ssgait/tensor.hpp"

namespace ssgait {

// Projection head: one kernel-1 conv d1->d2 shared across stripes, ReLU, then
// batch norm over the batch axis with a scale/shift per (stripe, channel)
// feature. The batch norm is what keeps the two branches from collapsing onto
// a constant vector.
struct ProjectionParams {
  Param w, b;          // [d2,d1], [d2]
  Param gamma, beta;   // [n*d2] each
  Tensor run_mean, run_var;

  void init(int n, int d1, int d2, const Rng& rng, const std::string& prefix);
  std::vector<Param*> learnable() { return {&w, &b, &gamma, &beta}; }
};

// Prediction head: one linear d2->d2 shared across stripes, online branch only.
struct PredictionParams {
  Param w, b;

  void init(int d2, const Rng& rng);
};

struct PretrainConfig {
  int iterations = 500;
  int P = 8;
  int K = 2;
  int k = 30;        // online frames per sample; the window is k+1
  int d2 = 256;
  double lr = 1e-4;
  double tau = 0.99; // EMA momentum for the target branch
  double bn_eps = 1e-8;
  double bn_momentum = 0.9;
};

struct OnlineNetwork {
  BackboneConfig cfg;
  int d2 = 256;
  BackboneParams backbone;
  ProjectionParams proj;
  PredictionParams pred;

  void init(const BackboneConfig& bb_cfg, int d2_, const Rng& rng);
  std::vector<Param*> trainable();
};

// The target branch keeps momentum copies of the frame encoder + spatial head
// and of the projection. Its per-stripe output maps are NOT copies: the
// forward pass reads the online network's maps live (disable via step options
// only for tests). The momentum copy starts as an exact clone of the online.
struct TargetNetwork {
  BackboneParams encoder;  // only the encoder + spatial head blocks are used
  ProjectionParams proj;

  void init_from(const OnlineNetwork& online);
};

// theta' <- tau*theta' + (1-tau)*theta on encoder + projection blocks; BN
// running statistics are copied outright. The shared output maps are skipped.
void ema_update(TargetNetwork& target, const OnlineNetwork& online, double tau);

// Per-stripe cosine similarity, averaged, negated so smaller is better.
// Throws DegenerateNorm when any row norm falls under 1e-12.
double cosine_loss(const Tensor& y_on, const Tensor& y_tar);
// Accumulates scale * d(loss)/d(y_on) into g_on and returns the loss.
double cosine_loss_backward(const Tensor& y_on, const Tensor& y_tar, Tensor& g_on,
                            double scale);

struct PretrainStepOptions {
  bool share_bins = true;  // target reads the online output maps (live)
  bool use_bn = true;      // false: projection heads skip batch norm (diagnostic)
};

struct StepStats {
  double loss = 0.0;
  double mean_cosine = 0.0;    // -loss, the quantity the smoke tests track
  double y_tar_std_min = 0.0;  // min across-batch std over target feature dims
};

// One pre-training step: both branches forward, cosine loss, backprop through
// the online branch only, Adam update, EMA update of the target.
StepStats pretrain_step(const PretextBatch& batch, OnlineNetwork& online,
                        TargetNetwork& target, Adam& opt, const PretrainConfig& cfg,
                        const PretrainStepOptions& opts = {});

// Train-mode batch forwards (batch statistics in BN), exposed for tests and
// diagnostics. Outputs are [B, n*d2]; `frames` must share one length k.
Tensor online_forward_batch(const std::vector<const std::vector<Silhouette>*>& frames,
                            OnlineNetwork& online, const PretrainConfig& cfg);
Tensor target_forward_batch(const std::vector<const Silhouette*>& frames,
                            const TargetNetwork& target, const OnlineNetwork& online,
                            const PretrainConfig& cfg, const PretrainStepOptions& opts = {});

// Single-sample forwards in inference mode (running BN statistics).
Tensor online_forward_eval(const std::vector<Silhouette>& frames,
                           const OnlineNetwork& online, const PretrainConfig& cfg);
Tensor target_forward_eval(const Silhouette& frame, const TargetNetwork& target,
                           const OnlineNetwork& online, const PretrainConfig& cfg);

}  // namespace ssgait

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ssgait/rng.hpp"
#include "ssgait/silhouette.hpp"
#include "ssgait/tensor.hpp"

namespace ssgait {

// Network variants: Full keeps the pyramid spatial head and per-stripe
// temporal blocks; NoHpm swaps the pyramid for plain convs + global average
// pooling (one row broadcast to all stripes); NoMtb shares one temporal
// kernel across stripes and replaces temporal max with an average.
enum class Ablation { Full, NoHpm, NoMtb };

const char* ablation_name(Ablation a);
std::optional<Ablation> parse_ablation(std::string_view s);

struct BackboneConfig {
  int height = 64;      // aligned silhouette size fed to the encoder
  int width = 44;
  int scales = 5;       // pyramid depth S; stripe count n = 2^S - 1
  int radius = 1;       // temporal kernel reach (kernel size 2r+1)
  int stripe_dim = 128; // per-stripe channel width out of the spatial head (c)
  int embed_dim = 128;  // temporal block width and final per-stripe width (d1)
  int cnn_mid = 32;     // channels of the first two encoder convs
  int cnn_out = 64;     // channels of the final encoder conv (C2)
  double lrelu_alpha = 0.01;
  Ablation ablation = Ablation::Full;

  int n_stripes() const { return (1 << scales) - 1; }
  int fm_h() const { return height / 2; }
  int fm_w() const { return width / 2; }

  // Throws on inconsistent dimensions. stripe_dim must equal embed_dim so the
  // per-stripe output maps can double as the target branch's stripe maps.
  void validate() const;
};

// Horizontal strip layout of a feature map of height fm_h, scale-major:
// the whole map first, then halves top-to-bottom, then quarters, ...
struct Strip {
  int y0;
  int rows;
};
std::vector<Strip> strip_layout(int fm_h, int scales);

struct BackboneParams {
  // Frame encoder.
  Param c1w, c1b, c2w, c2b, c3w, c3b;
  // Pyramid spatial head: one map per stripe (Full / NoMtb).
  std::vector<Param> hpm_w, hpm_b;
  // Plain spatial head (NoHpm): conv stack + global average pool + one map.
  Param p1w, p1b, p2w, p2b, p3w, p3b, pfw, pfb;
  // Temporal blocks: per-stripe kernels (Full / NoHpm) or one shared kernel
  // (NoMtb).
  std::vector<Param> tcn_w, tcn_b;
  Param stw, stb;
  // Per-stripe output maps ("FC bins"). During self-supervised pre-training
  // the target branch applies these same blocks to its single frame.
  std::vector<Param> bin_w, bin_b;

  void init(const BackboneConfig& cfg, const Rng& rng);

  // Parameter blocks active under the given ablation, in a fixed order.
  std::vector<Param*> active(const BackboneConfig& cfg);
  std::vector<const Param*> active(const BackboneConfig& cfg) const;

  void zero_grads(const BackboneConfig& cfg);
};

struct CnnTrace {
  Tensor x0, a1, a2, pooled, fm;
  std::vector<std::int32_t> pool_idx;
};

struct SpatialTrace {
  Tensor pooled;                    // [n, C2] strip descriptors (Full / NoMtb)
  std::vector<std::int32_t> max_idx;
  Tensor pa1, pa2, pa3;             // NoHpm conv activations
  Tensor gap;                       // [C2]
};

struct MtbTrace {
  Tensor stripes;  // [n, T, c]
  Tensor act;      // [n, T, d1] post-activation
  std::vector<std::int32_t> tmax;
  Tensor pooled;   // [n, d1] before the output maps
};

struct BackboneTrace {
  std::vector<CnnTrace> cnn;
  std::vector<SpatialTrace> spatial;
  MtbTrace mtb;
};

// Frame encoder: aligned silhouette -> feature map [C2, h/2, w/2].
Tensor cnn_encode(const Silhouette& frame, const BackboneConfig& cfg,
                  const BackboneParams& p, CnnTrace* tr);
void cnn_backward(const CnnTrace& tr, const BackboneConfig& cfg, const Tensor& gfm,
                  BackboneParams& p);

// Spatial head: feature map -> stripe rows [n, c].
Tensor spatial_forward(const Tensor& fm, const BackboneConfig& cfg,
                       const BackboneParams& p, SpatialTrace* tr);
void spatial_backward(const SpatialTrace& tr, const BackboneConfig& cfg,
                      const Tensor& fm, const Tensor& grows, BackboneParams& p,
                      Tensor& gfm);

// Temporal head incl. output maps: stripe sequence [n, T, c] -> [n, d1].
Tensor temporal_forward(const Tensor& stripes, const BackboneConfig& cfg,
                        const BackboneParams& p, MtbTrace* tr);
// Returns the gradient w.r.t. the stripe sequence.
Tensor temporal_backward(const MtbTrace& tr, const BackboneConfig& cfg,
                         const Tensor& gout, BackboneParams& p);

// Per-stripe output maps alone: rows [n, c] -> [n, d1]. The target branch of
// the pre-training pair uses this directly on a single frame's stripe rows.
Tensor fc_bins_apply(const Tensor& rows, const BackboneParams& p);
void fc_bins_backward(const Tensor& rows, const Tensor& gout, BackboneParams& p,
                      Tensor& grows);

// Whole pipeline: T frames -> sequence descriptor [n, d1]. Pass a trace to
// enable the matching backward call.
Tensor backbone_forward(const std::vector<Silhouette>& frames, const BackboneConfig& cfg,
                        const BackboneParams& p, BackboneTrace* tr);
void backbone_backward(const BackboneTrace& tr, const BackboneConfig& cfg,
                       const Tensor& gout, BackboneParams& p);

}  // namespace ssgait

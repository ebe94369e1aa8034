#include "ssgait/finetune.hpp"

#include <cmath>

#include "ssgait/errors.hpp"

namespace ssgait {

Tensor embed_sequence(const std::vector<Silhouette>& frames, const BackboneConfig& cfg,
                      const BackboneParams& params) {
  return backbone_forward(frames, cfg, params, nullptr);
}

TripletStats finetune_step(const ClipBatch& batch, const BackboneConfig& cfg,
                           BackboneParams& params, Adam& opt, double margin) {
  const size_t B = batch.samples.size();
  std::vector<BackboneTrace> traces(B);
  std::vector<Tensor> emb(B);
  std::vector<int> labels(B);
  for (size_t b = 0; b < B; ++b) {
    emb[b] = backbone_forward(batch.samples[b].frames, cfg, params, &traces[b]);
    labels[b] = batch.samples[b].identity;
  }

  std::vector<Tensor> grads;
  grads.reserve(B);
  for (size_t b = 0; b < B; ++b) grads.emplace_back(emb[b].shape());
  const TripletStats stats = triplet_loss_ba_backward(emb, labels, margin, grads);
  if (!std::isfinite(stats.loss)) throw NonFiniteLoss("triplet loss is not finite");

  params.zero_grads(cfg);
  if (stats.active > 0) {
    for (size_t b = 0; b < B; ++b) backbone_backward(traces[b], cfg, grads[b], params);
  }
  opt.step(params.active(cfg));
  return stats;
}

}  // namespace ssgait

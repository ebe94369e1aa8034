#pragma once

#include <vector>

#include "ssgait/adam.hpp"
#include "ssgait/backbone.hpp"
#include "ssgait/sampling.hpp"
#include "ssgait/triplet.hpp"

namespace ssgait {

// Sequence embedding used by fine-tuning and evaluation: the plain backbone
// output, no projection or prediction heads.
Tensor embed_sequence(const std::vector<Silhouette>& frames, const BackboneConfig& cfg,
                      const BackboneParams& params);

// One supervised step: embed the P*K clips, batch-all triplet loss, Adam
// update of the backbone parameters.
TripletStats finetune_step(const ClipBatch& batch, const BackboneConfig& cfg,
                           BackboneParams& params, Adam& opt, double margin);

}  // namespace ssgait

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssgait/backbone.hpp"
#include "ssgait/pretrain.hpp"
#include "ssgait/tensor.hpp"

namespace ssgait {

// On-disk model snapshot. Binary layout: magic, format version, phase string,
// step counter, config echo text, named parameter blocks with explicit
// shapes, 64-bit little-endian floats throughout, trailing CRC-32 over
// everything before it. Same state always serializes to the same bytes.
struct Checkpoint {
  std::string phase;        // "pretrain" or "finetune"
  std::uint64_t step = 0;
  std::string config_echo;  // resolved key=value text of the producing run
  std::vector<std::pair<std::string, Tensor>> blocks;

  void add(std::string name, const Tensor& t) { blocks.emplace_back(std::move(name), t); }
  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Network state <-> checkpoint blocks. Unpacking requires an
// already-initialized network of matching architecture; a block that is
// missing or has the wrong shape raises VersionMismatch.
Checkpoint pack_pretrain(const OnlineNetwork& online, const TargetNetwork& target,
                         std::uint64_t step, std::string config_echo);
void unpack_pretrain(const Checkpoint& ck, OnlineNetwork& online, TargetNetwork& target);

Checkpoint pack_backbone(const BackboneConfig& cfg, const BackboneParams& params,
                         std::uint64_t step, std::string config_echo);
void unpack_backbone(const Checkpoint& ck, const BackboneConfig& cfg,
                     BackboneParams& params);

// Seeds a fine-tuning backbone from a pre-training checkpoint (the online
// branch's backbone blocks; projection/prediction heads are dropped).
void unpack_backbone_from_pretrain(const Checkpoint& ck, const BackboneConfig& cfg,
                                   BackboneParams& params);

}  // namespace ssgait

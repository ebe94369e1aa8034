#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssgait/dataset.hpp"

namespace ssgait {

// Synthetic walking-figure dataset. Each identity carries persistent latent
// body and gait parameters; sequences render an articulated stick/ellipse
// figure to 64x44 silhouettes. Views apply a horizontal shear/scale, BG adds
// a carried blob, CL thickens the torso. Same seed, same bytes.
struct SynthConfig {
  int n_identities = 8;
  int sequences_per_identity = 4;
  std::vector<int> views = {0, 18};
  std::vector<Condition> conditions = {Condition::NM};
  int frames_per_sequence = 40;
  std::uint64_t seed = 7;
};

DatasetIndex generate_synthetic_dataset(const SynthConfig& cfg);

// Writes the dataset in the CASIA-B directory convention:
// root/<id:03d>/<cond>-<seq:02d>/<view:03d>/<frame:04d>.png
void materialize_synthetic_dataset(const SynthConfig& cfg, const std::string& root);

}  // namespace ssgait

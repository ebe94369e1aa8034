#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ssgait/dataset.hpp"
#include "ssgait/rng.hpp"
#include "ssgait/silhouette.hpp"

namespace ssgait {

// What to do when a sequence is shorter than the requested window.
enum class PadPolicy { Error, Loop };

// One self-supervised pretext sample: k consecutive online frames plus the
// single frame immediately after them, fed to the target branch.
struct PretextSample {
  std::vector<Silhouette> online;  // k frames
  Silhouette target;               // frame k (0-based) of the window
  int identity = 0;
};

struct ClipSample {
  std::vector<Silhouette> frames;
  int identity = 0;
};

// Contiguous window of `len` frames at a random admissible start. If the
// sequence is shorter, PadPolicy::Loop repeats it cyclically from a random
// start; PadPolicy::Error throws SequenceTooShort.
std::vector<Silhouette> clip_window(const std::vector<Silhouette>& frames, int len,
                                    Rng& rng, PadPolicy pad);

PretextSample make_pretext_sample(const std::vector<Silhouette>& frames, int k,
                                  int identity, Rng& rng, PadPolicy pad);

template <typename Sample>
struct Batch {
  int P = 0;  // identities
  int K = 0;  // sequences per identity
  std::vector<Sample> samples;  // P*K, grouped by identity
};

using PretextBatch = Batch<PretextSample>;
using ClipBatch = Batch<ClipSample>;

// Samples P identities x K sequences batches from the training split.
// Identities and sequences are drawn without replacement per batch; frames
// come through a FrameStore so alignment happens once per sequence.
class BatchSampler {
 public:
  BatchSampler(const DatasetIndex& index, std::vector<int> identities, FrameStore& store);

  PretextBatch sample_pretext(int P, int K, int k, Rng& rng, PadPolicy pad);
  ClipBatch sample_clips(int P, int K, int len, Rng& rng, PadPolicy pad);

  const std::vector<int>& identities() const { return ids_; }

 private:
  // Identities with >= K sequences of aligned length >= min_len each.
  std::vector<std::pair<int, std::vector<size_t>>> eligible(int K, int min_len,
                                                            PadPolicy pad) const;

  const DatasetIndex* index_;
  FrameStore* store_;
  std::vector<int> ids_;
  std::unordered_map<int, std::vector<size_t>> by_identity_;
};

}  // namespace ssgait

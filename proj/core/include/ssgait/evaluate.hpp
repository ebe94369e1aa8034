#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssgait/backbone.hpp"
#include "ssgait/dataset.hpp"
#include "ssgait/tensor.hpp"

namespace ssgait {

struct EvalEntry {
  Tensor emb;  // [n, d1]
  int identity = 0;
  int view = 0;
  Condition cond = Condition::NM;
  int seq_index = 0;
};

struct GallerySet {
  std::vector<EvalEntry> entries;
};

struct ProbeSet {
  Condition cond = Condition::NM;
  std::vector<EvalEntry> entries;
};

// How sequences are assigned gallery/probe roles.
//   CasiaB: gallery = NM sequences 1-4, probes = NM 5-6, BG 1-2, CL 1-2.
//   SeqSplit: per (identity, view, condition) the lowest sequence index is
//   the probe, the rest are gallery (single-condition datasets).
enum class EvalProtocol { CasiaB, SeqSplit };

struct ProtocolSets {
  GallerySet gallery;
  std::vector<ProbeSet> probes;  // one per condition present
  std::vector<std::string> warnings;
};

// Embeds every test sequence and assigns roles. Sequences shorter than
// min_window frames are looped deterministically from the start.
ProtocolSets build_protocol_sets(const DatasetIndex& test_index, FrameStore& store,
                                 const BackboneConfig& cfg, const BackboneParams& params,
                                 EvalProtocol protocol, int min_window);

struct EvalCell {
  bool present = false;
  double acc = 0.0;
  std::int64_t attempts = 0;
  std::int64_t hits = 0;
};

struct EvalMatrix {
  Condition cond = Condition::NM;
  std::vector<int> probe_views;
  std::vector<int> gallery_views;
  std::vector<std::vector<EvalCell>> grid;  // [probe_view][gallery_view]
  std::vector<double> probe_view_mean;      // over present cells; NaN if none
  double grand_mean = 0.0;                  // over all present cells
  std::int64_t present_cells = 0;
  std::vector<std::string> warnings;
};

// Rank-1 accuracy per (probe view, gallery view) pair. For each probe the
// nearest gallery entry of the given view wins; ties break on the
// content-independent key (distance, identity, sequence index). With
// exclusion on, identical-view pairs are absent and never enter means.
EvalMatrix rank1_matrix(const GallerySet& gallery, const ProbeSet& probe,
                        bool exclude_identical_view);

// Deterministic evaluation window: the whole sequence, cyclically extended
// from the start when shorter than min_len.
std::vector<Silhouette> eval_window(const std::vector<Silhouette>& frames, int min_len);

}  // namespace ssgait

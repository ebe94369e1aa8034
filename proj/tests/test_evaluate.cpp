#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "ssgait/errors.hpp"
#include "ssgait/evaluate.hpp"
#include "ssgait/rng.hpp"

using namespace ssgait;

namespace {

Silhouette tagged(double v) {
  Silhouette f(4, 4);
  f.at(0, 0) = v;
  return f;
}

EvalEntry entry(double x, double y, int identity, int view, int seq,
                Condition cond = Condition::NM) {
  EvalEntry e;
  e.emb = Tensor({1, 2});
  e.emb(0, 0) = x;
  e.emb(0, 1) = y;
  e.identity = identity;
  e.view = view;
  e.cond = cond;
  e.seq_index = seq;
  return e;
}

// Raw frame a real silhouette pipeline can align: a centered figure whose
// width depends on the identity, with a per-frame marker for variety.
Silhouette raw_frame(int identity, int variant) {
  Silhouette f(64, 44);
  const int half = 6 + 2 * identity;
  for (int y = 4; y < 60; ++y) {
    for (int x = 22 - half; x < 22 + half; ++x) f.at(y, x) = 1.0;
  }
  f.at(8 + (variant % 6), 22) = 0.5;
  return f;
}

GaitSequence make_seq(int identity, int view, Condition cond, int seq_index, int frames,
                      bool blank = false) {
  GaitSequence s;
  s.identity = identity;
  s.view_deg = view;
  s.condition = cond;
  s.seq_index = seq_index;
  auto inline_frames = std::make_shared<std::vector<Silhouette>>();
  for (int t = 0; t < frames; ++t) {
    inline_frames->push_back(blank ? Silhouette(64, 44) : raw_frame(identity, seq_index + t));
  }
  s.frames_inline = inline_frames;
  return s;
}

BackboneConfig eval_config() {
  BackboneConfig cfg;  // aligned input, but the smallest usable widths
  cfg.scales = 2;
  cfg.radius = 1;
  cfg.stripe_dim = 4;
  cfg.embed_dim = 4;
  cfg.cnn_mid = 2;
  cfg.cnn_out = 3;
  return cfg;
}

const EvalCell& cell(const EvalMatrix& m, int probe_view, int gallery_view) {
  for (size_t pi = 0; pi < m.probe_views.size(); ++pi) {
    if (m.probe_views[pi] != probe_view) continue;
    for (size_t gi = 0; gi < m.gallery_views.size(); ++gi) {
      if (m.gallery_views[gi] == gallery_view) return m.grid[pi][gi];
    }
  }
  REQUIRE(false);
  static EvalCell dummy;
  return dummy;
}

}  // namespace

TEST_CASE("short sequences are extended cyclically from the start") {
  std::vector<Silhouette> frames = {tagged(0.1), tagged(0.2)};
  std::vector<Silhouette> w = eval_window(frames, 5);
  REQUIRE(w.size() == 5);
  CHECK(w[0].at(0, 0) == 0.1);
  CHECK(w[1].at(0, 0) == 0.2);
  CHECK(w[2].at(0, 0) == 0.1);
  CHECK(w[3].at(0, 0) == 0.2);
  CHECK(w[4].at(0, 0) == 0.1);

  // Long enough sequences come back untouched.
  std::vector<Silhouette> same = eval_window(frames, 2);
  CHECK(same.size() == 2);
  CHECK(same[1].at(0, 0) == 0.2);

  CHECK_THROWS_AS(eval_window({}, 3), SequenceTooShort);
}

TEST_CASE("nearest gallery neighbour decides rank-1") {
  GallerySet gal;
  gal.entries = {entry(0, 0, 1, 0, 1), entry(10, 0, 2, 0, 1),
                 entry(0, 5, 1, 90, 1), entry(10, 5, 2, 90, 1)};
  ProbeSet probe;
  probe.entries = {entry(1, 0, 1, 0, 5), entry(9, 0, 2, 0, 5),
                   entry(2, 5, 1, 90, 5), entry(4, 5, 2, 90, 5)};

  EvalMatrix m = rank1_matrix(gal, probe, false);
  REQUIRE(m.probe_views == std::vector<int>{0, 90});
  REQUIRE(m.gallery_views == std::vector<int>{0, 90});

  // Same-view lanes: all but the (4,5) probe sit nearer their own identity.
  CHECK(cell(m, 0, 0).acc == doctest::Approx(1.0));
  CHECK(cell(m, 0, 0).attempts == 2);
  CHECK(cell(m, 90, 90).acc == doctest::Approx(0.5));  // (4,5) lands on id 1

  // Cross-view lanes compare against the other view's gallery.
  // Probe (1,0) vs gallery@90: d(id1)=sqrt(1+25), d(id2)=sqrt(81+25) -> id1.
  CHECK(cell(m, 0, 90).attempts == 2);
  CHECK(cell(m, 0, 90).acc == doctest::Approx(1.0));

  CHECK(m.present_cells == 4);
}

TEST_CASE("distance ties break toward the smaller identity") {
  GallerySet gal;
  gal.entries = {entry(1, 0, 2, 0, 1), entry(-1, 0, 1, 0, 3)};
  ProbeSet probe;
  probe.entries = {entry(0, 0, 1, 0, 9)};
  EvalMatrix m = rank1_matrix(gal, probe, false);
  CHECK(cell(m, 0, 0).hits == 1);  // equidistant; identity 1 < identity 2

  // Flip the probe identity: the same tie now resolves to a miss.
  probe.entries = {entry(0, 0, 2, 0, 9)};
  EvalMatrix m2 = rank1_matrix(gal, probe, false);
  CHECK(cell(m2, 0, 0).hits == 0);

  // Deterministic: repeated evaluation gives identical grids.
  EvalMatrix m3 = rank1_matrix(gal, probe, false);
  CHECK(m3.grid[0][0].hits == m2.grid[0][0].hits);
  CHECK(m3.grand_mean == m2.grand_mean);
}

TEST_CASE("identical-view cells vanish under exclusion and never enter means") {
  GallerySet gal;
  gal.entries = {entry(0, 0, 1, 0, 1), entry(10, 0, 2, 0, 1),
                 entry(0, 5, 1, 18, 1), entry(10, 5, 2, 18, 1)};
  ProbeSet probe;
  // At view 0: both probes resolve correctly against view-18 gallery.
  // At view 18: id2's probe sits nearer id1's view-0 entry (miss).
  probe.entries = {entry(1, 0, 1, 0, 5), entry(9, 0, 2, 0, 5),
                   entry(1, 5, 1, 18, 5), entry(4, 2, 2, 18, 5)};

  EvalMatrix m = rank1_matrix(gal, probe, true);
  CHECK_FALSE(cell(m, 0, 0).present);
  CHECK_FALSE(cell(m, 18, 18).present);
  CHECK(cell(m, 0, 18).present);
  CHECK(cell(m, 18, 0).present);
  CHECK(m.present_cells == 2);

  const double a = cell(m, 0, 18).acc, b = cell(m, 18, 0).acc;
  CHECK(a == doctest::Approx(1.0));
  CHECK(b == doctest::Approx(0.5));
  CHECK(m.grand_mean == doctest::Approx((a + b) / 2.0));
  CHECK(m.probe_view_mean[0] == doctest::Approx(a));
  CHECK(m.probe_view_mean[1] == doctest::Approx(b));

  CHECK_THROWS_AS(rank1_matrix(GallerySet{}, probe, false), NotEnoughData);
  CHECK_THROWS_AS(rank1_matrix(gal, ProbeSet{}, false), NotEnoughData);
}

TEST_CASE("the multi-condition protocol assigns the standard roles") {
  DatasetIndex idx;
  for (int id = 1; id <= 2; ++id) {
    for (int view : {0, 90}) {
      for (int s = 1; s <= 6; ++s) idx.sequences.push_back(make_seq(id, view, Condition::NM, s, 2));
      for (int s = 1; s <= 4; ++s) idx.sequences.push_back(make_seq(id, view, Condition::BG, s, 2));
      for (int s = 1; s <= 4; ++s) idx.sequences.push_back(make_seq(id, view, Condition::CL, s, 2));
    }
  }
  FrameStore store(idx);
  BackboneConfig cfg = eval_config();
  BackboneParams params;
  params.init(cfg, Rng(5).stream("init"));

  ProtocolSets sets = build_protocol_sets(idx, store, cfg, params, EvalProtocol::CasiaB, 3);

  CHECK(sets.gallery.entries.size() == 16);  // NM 1-4 x 2 ids x 2 views
  for (const EvalEntry& e : sets.gallery.entries) {
    CHECK(e.cond == Condition::NM);
    CHECK(e.seq_index <= 4);
    CHECK(e.emb.dim(0) == cfg.n_stripes());
    CHECK(e.emb.dim(1) == cfg.embed_dim);
  }

  REQUIRE(sets.probes.size() == 3);
  CHECK(sets.probes[0].cond == Condition::NM);
  CHECK(sets.probes[0].entries.size() == 8);  // NM 5-6
  for (const EvalEntry& e : sets.probes[0].entries) CHECK(e.seq_index >= 5);
  CHECK(sets.probes[1].cond == Condition::BG);
  CHECK(sets.probes[1].entries.size() == 8);  // BG 1-2
  for (const EvalEntry& e : sets.probes[1].entries) CHECK(e.seq_index <= 2);
  CHECK(sets.probes[2].cond == Condition::CL);
  CHECK(sets.probes[2].entries.size() == 8);

  // BG/CL 3-4 fall outside the roles: one warning each.
  CHECK(sets.warnings.size() == 16);

  // The grid machinery runs on the produced sets.
  EvalMatrix m = rank1_matrix(sets.gallery, sets.probes[0], true);
  CHECK(m.present_cells == 2);
  CHECK(cell(m, 0, 90).attempts == 4);
}

TEST_CASE("the sequence-split protocol probes each group's first sequence") {
  DatasetIndex idx;
  for (int id = 1; id <= 2; ++id) {
    for (int view : {0, 90}) {
      for (int s : {2, 5, 7}) idx.sequences.push_back(make_seq(id, view, Condition::NM, s, 4));
    }
  }
  idx.sequences.push_back(make_seq(3, 0, Condition::NM, 1, 2, /*blank=*/true));

  FrameStore store(idx);
  BackboneConfig cfg = eval_config();
  BackboneParams params;
  params.init(cfg, Rng(6).stream("init"));

  ProtocolSets sets = build_protocol_sets(idx, store, cfg, params, EvalProtocol::SeqSplit, 3);

  CHECK(sets.gallery.entries.size() == 8);  // seqs 5 and 7
  for (const EvalEntry& e : sets.gallery.entries) CHECK(e.seq_index > 2);
  REQUIRE(sets.probes.size() == 1);
  CHECK(sets.probes[0].entries.size() == 4);  // seq 2 per (id, view)
  for (const EvalEntry& e : sets.probes[0].entries) CHECK(e.seq_index == 2);

  // The all-blank sequence was dropped with a warning, not embedded.
  REQUIRE(sets.warnings.size() == 1);
  CHECK(sets.warnings[0].find("no usable frames") != std::string::npos);

  CHECK_THROWS_AS(
      build_protocol_sets(DatasetIndex{}, store, cfg, params, EvalProtocol::SeqSplit, 3),
      NotEnoughData);

  // One sequence per group: everything becomes a probe, nothing a gallery.
  DatasetIndex lonely;
  lonely.sequences.push_back(make_seq(1, 0, Condition::NM, 1, 3));
  lonely.sequences.push_back(make_seq(2, 0, Condition::NM, 1, 3));
  FrameStore lonely_store(lonely);
  CHECK_THROWS_AS(
      build_protocol_sets(lonely, lonely_store, cfg, params, EvalProtocol::SeqSplit, 3),
      NotEnoughData);
}

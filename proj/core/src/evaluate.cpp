#include "ssgait/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "ssgait/errors.hpp"
#include "ssgait/finetune.hpp"
#include "ssgait/triplet.hpp"

namespace ssgait {

std::vector<Silhouette> eval_window(const std::vector<Silhouette>& frames, int min_len) {
  if (frames.empty()) throw SequenceTooShort("cannot evaluate an empty sequence");
  if (static_cast<int>(frames.size()) >= min_len) return frames;
  std::vector<Silhouette> out;
  out.reserve(static_cast<size_t>(min_len));
  for (int t = 0; t < min_len; ++t) out.push_back(frames[static_cast<size_t>(t) % frames.size()]);
  return out;
}

ProtocolSets build_protocol_sets(const DatasetIndex& test_index, FrameStore& store,
                                 const BackboneConfig& cfg, const BackboneParams& params,
                                 EvalProtocol protocol, int min_window) {
  if (test_index.sequences.empty()) throw NotEnoughData("test index is empty");
  ProtocolSets out;

  // SeqSplit probe role: lowest sequence index per (identity, view, condition).
  std::map<std::tuple<int, int, Condition>, int> first_seq;
  if (protocol == EvalProtocol::SeqSplit) {
    for (const GaitSequence& s : test_index.sequences) {
      auto key = std::make_tuple(s.identity, s.view_deg, s.condition);
      auto it = first_seq.find(key);
      if (it == first_seq.end() || s.seq_index < it->second) first_seq[key] = s.seq_index;
    }
  }

  std::map<Condition, size_t> probe_slot;
  for (size_t pos = 0; pos < test_index.sequences.size(); ++pos) {
    const GaitSequence& s = test_index.sequences[pos];
    const std::vector<Silhouette>& frames = store.aligned(pos);
    if (frames.empty()) {
      out.warnings.push_back("sequence with no usable frames skipped: identity " +
                             std::to_string(s.identity) + " view " +
                             std::to_string(s.view_deg));
      continue;
    }

    bool is_gallery = false, is_probe = false;
    if (protocol == EvalProtocol::CasiaB) {
      if (s.condition == Condition::NM && s.seq_index <= 4) {
        is_gallery = true;
      } else if ((s.condition == Condition::NM && (s.seq_index == 5 || s.seq_index == 6)) ||
                 (s.condition != Condition::NM && s.seq_index <= 2)) {
        is_probe = true;
      } else {
        out.warnings.push_back("sequence outside the protocol roles skipped: " +
                               std::string(condition_name(s.condition)) + "-" +
                               std::to_string(s.seq_index));
        continue;
      }
    } else {
      const auto key = std::make_tuple(s.identity, s.view_deg, s.condition);
      is_probe = first_seq.at(key) == s.seq_index;
      is_gallery = !is_probe;
    }

    EvalEntry e;
    e.emb = embed_sequence(eval_window(frames, min_window), cfg, params);
    e.identity = s.identity;
    e.view = s.view_deg;
    e.cond = s.condition;
    e.seq_index = s.seq_index;
    if (is_gallery) {
      out.gallery.entries.push_back(std::move(e));
    } else if (is_probe) {
      auto it = probe_slot.find(s.condition);
      if (it == probe_slot.end()) {
        probe_slot[s.condition] = out.probes.size();
        out.probes.push_back(ProbeSet{s.condition, {}});
        it = probe_slot.find(s.condition);
      }
      out.probes[it->second].entries.push_back(std::move(e));
    }
  }

  if (out.gallery.entries.empty()) throw NotEnoughData("protocol produced an empty gallery");
  if (out.probes.empty()) throw NotEnoughData("protocol produced no probe sets");
  std::sort(out.probes.begin(), out.probes.end(),
            [](const ProbeSet& a, const ProbeSet& b) {
              return static_cast<int>(a.cond) < static_cast<int>(b.cond);
            });
  return out;
}

EvalMatrix rank1_matrix(const GallerySet& gallery, const ProbeSet& probe,
                        bool exclude_identical_view) {
  if (gallery.entries.empty()) throw NotEnoughData("gallery is empty");
  if (probe.entries.empty()) throw NotEnoughData("probe set is empty");

  std::set<int> pv, gv;
  for (const EvalEntry& e : probe.entries) pv.insert(e.view);
  for (const EvalEntry& e : gallery.entries) gv.insert(e.view);

  EvalMatrix m;
  m.cond = probe.cond;
  m.probe_views.assign(pv.begin(), pv.end());
  m.gallery_views.assign(gv.begin(), gv.end());
  m.grid.assign(m.probe_views.size(), std::vector<EvalCell>(m.gallery_views.size()));

  for (size_t gi = 0; gi < m.gallery_views.size(); ++gi) {
    const int vg = m.gallery_views[gi];
    std::vector<const EvalEntry*> lane;
    for (const EvalEntry& e : gallery.entries) {
      if (e.view == vg) lane.push_back(&e);
    }
    for (size_t pi = 0; pi < m.probe_views.size(); ++pi) {
      const int vp = m.probe_views[pi];
      if (exclude_identical_view && vp == vg) continue;
      EvalCell& cell = m.grid[pi][gi];
      if (lane.empty()) {
        m.warnings.push_back("no gallery entries at view " + std::to_string(vg));
        continue;
      }
      for (const EvalEntry& p : probe.entries) {
        if (p.view != vp) continue;
        const EvalEntry* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const EvalEntry* g : lane) {
          const double d = stripe_distance(p.emb, g->emb);
          if (!best || d < best_d ||
              (d == best_d && (g->identity < best->identity ||
                               (g->identity == best->identity &&
                                g->seq_index < best->seq_index)))) {
            best = g;
            best_d = d;
          }
        }
        ++cell.attempts;
        if (best->identity == p.identity) ++cell.hits;
      }
      if (cell.attempts > 0) {
        cell.present = true;
        cell.acc = static_cast<double>(cell.hits) / static_cast<double>(cell.attempts);
      }
    }
  }

  m.probe_view_mean.assign(m.probe_views.size(), std::numeric_limits<double>::quiet_NaN());
  double grand = 0.0;
  for (size_t pi = 0; pi < m.probe_views.size(); ++pi) {
    double s = 0.0;
    int cnt = 0;
    for (size_t gi = 0; gi < m.gallery_views.size(); ++gi) {
      if (!m.grid[pi][gi].present) continue;
      s += m.grid[pi][gi].acc;
      ++cnt;
    }
    if (cnt > 0) {
      m.probe_view_mean[pi] = s / cnt;
      grand += s;
      m.present_cells += cnt;
    }
  }
  m.grand_mean = m.present_cells > 0 ? grand / static_cast<double>(m.present_cells) : 0.0;
  return m;
}

}  // namespace ssgait

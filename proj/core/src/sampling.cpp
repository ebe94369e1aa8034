#include "ssgait/sampling.hpp"

#include <algorithm>

#include "ssgait/errors.hpp"

namespace ssgait {

std::vector<Silhouette> clip_window(const std::vector<Silhouette>& frames, int len,
                                    Rng& rng, PadPolicy pad) {
  const int n = static_cast<int>(frames.size());
  if (n == 0) throw SequenceTooShort("sequence has no usable frames");
  std::vector<Silhouette> out;
  out.reserve(static_cast<size_t>(len));
  if (n >= len) {
    const int start = static_cast<int>(rng.uniform_int(0, n - len));
    out.assign(frames.begin() + start, frames.begin() + start + len);
    return out;
  }
  if (pad == PadPolicy::Error) {
    throw SequenceTooShort("sequence of " + std::to_string(n) +
                           " frames, window needs " + std::to_string(len));
  }
  const int start = static_cast<int>(rng.uniform_int(0, n - 1));
  for (int t = 0; t < len; ++t) out.push_back(frames[static_cast<size_t>((start + t) % n)]);
  return out;
}

PretextSample make_pretext_sample(const std::vector<Silhouette>& frames, int k,
                                  int identity, Rng& rng, PadPolicy pad) {
  PretextSample s;
  s.identity = identity;
  std::vector<Silhouette> window = clip_window(frames, k + 1, rng, pad);
  s.target = std::move(window.back());
  window.pop_back();
  s.online = std::move(window);
  return s;
}

BatchSampler::BatchSampler(const DatasetIndex& index, std::vector<int> identities,
                           FrameStore& store)
    : index_(&index), store_(&store), ids_(std::move(identities)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (size_t pos = 0; pos < index.sequences.size(); ++pos) {
    const int id = index.sequences[pos].identity;
    if (std::binary_search(ids_.begin(), ids_.end(), id)) by_identity_[id].push_back(pos);
  }
}

std::vector<std::pair<int, std::vector<size_t>>> BatchSampler::eligible(
    int K, int min_len, PadPolicy pad) const {
  std::vector<std::pair<int, std::vector<size_t>>> out;
  for (int id : ids_) {
    auto it = by_identity_.find(id);
    if (it == by_identity_.end()) continue;
    std::vector<size_t> ok;
    for (size_t pos : it->second) {
      const size_t len = store_->aligned(pos).size();
      if (len == 0) continue;
      if (pad == PadPolicy::Error && len < static_cast<size_t>(min_len)) continue;
      ok.push_back(pos);
    }
    if (static_cast<int>(ok.size()) >= K) out.emplace_back(id, std::move(ok));
  }
  return out;
}

namespace {

// Picks P identities and K sequence positions each, without replacement.
std::vector<std::pair<int, std::vector<size_t>>> pick(
    std::vector<std::pair<int, std::vector<size_t>>> pool, int P, int K, int min_len,
    Rng& rng) {
  if (static_cast<int>(pool.size()) < P) {
    throw NotEnoughData("batch needs " + std::to_string(P) + " identities with " +
                        std::to_string(K) + " sequences of >= " + std::to_string(min_len) +
                        " frames; found " + std::to_string(pool.size()));
  }
  rng.shuffle(pool);
  pool.resize(static_cast<size_t>(P));
  for (auto& [id, seqs] : pool) {
    rng.shuffle(seqs);
    seqs.resize(static_cast<size_t>(K));
  }
  return pool;
}

}  // namespace

PretextBatch BatchSampler::sample_pretext(int P, int K, int k, Rng& rng, PadPolicy pad) {
  auto chosen = pick(eligible(K, k + 1, pad), P, K, k + 1, rng);
  PretextBatch batch;
  batch.P = P;
  batch.K = K;
  for (const auto& [id, seqs] : chosen) {
    for (size_t pos : seqs) {
      batch.samples.push_back(make_pretext_sample(store_->aligned(pos), k, id, rng, pad));
    }
  }
  return batch;
}

ClipBatch BatchSampler::sample_clips(int P, int K, int len, Rng& rng, PadPolicy pad) {
  auto chosen = pick(eligible(K, len, pad), P, K, len, rng);
  ClipBatch batch;
  batch.P = P;
  batch.K = K;
  for (const auto& [id, seqs] : chosen) {
    for (size_t pos : seqs) {
      ClipSample s;
      s.identity = id;
      s.frames = clip_window(store_->aligned(pos), len, rng, pad);
      batch.samples.push_back(std::move(s));
    }
  }
  return batch;
}

}  // namespace ssgait

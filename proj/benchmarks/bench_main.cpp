#include <benchmark/benchmark.h>

#include <vector>

#include "ssgait/adam.hpp"
#include "ssgait/evaluate.hpp"
#include "ssgait/finetune.hpp"
#include "ssgait/pretrain.hpp"
#include "ssgait/rng.hpp"
#include "ssgait/triplet.hpp"

using namespace ssgait;

namespace {

// The desk-scale configuration the training smoke runs use.
BackboneConfig desk_config() {
  BackboneConfig cfg;
  cfg.scales = 2;
  cfg.radius = 1;
  cfg.stripe_dim = 8;
  cfg.embed_dim = 8;
  cfg.cnn_mid = 4;
  cfg.cnn_out = 8;
  return cfg;
}

std::vector<Silhouette> random_frames(int T, const BackboneConfig& cfg, Rng& rng) {
  std::vector<Silhouette> out;
  for (int t = 0; t < T; ++t) {
    Silhouette f(cfg.height, cfg.width);
    for (double& v : f.px) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    out.push_back(std::move(f));
  }
  return out;
}

void bm_backbone_forward(benchmark::State& state) {
  BackboneConfig cfg = desk_config();
  Rng rng(1);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  Rng data = rng.stream("data");
  auto frames = random_frames(static_cast<int>(state.range(0)), cfg, data);
  for (auto _ : state) {
    Tensor y = backbone_forward(frames, cfg, p, nullptr);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(bm_backbone_forward)->Arg(4)->Arg(8)->Arg(16);

void bm_pretrain_step(benchmark::State& state) {
  BackboneConfig cfg = desk_config();
  PretrainConfig pc;
  pc.P = static_cast<int>(state.range(0));
  pc.K = 2;
  pc.k = 4;
  pc.d2 = 16;
  pc.lr = 0.03;
  pc.tau = 0.9;
  Rng rng(2);
  OnlineNetwork online;
  online.init(cfg, pc.d2, rng.stream("init"));
  TargetNetwork target;
  target.init_from(online);
  Adam opt({pc.lr, 0.9, 0.999, 1e-8});

  Rng data = rng.stream("data");
  PretextBatch batch;
  batch.P = pc.P;
  batch.K = pc.K;
  for (int i = 0; i < pc.P; ++i) {
    for (int j = 0; j < pc.K; ++j) {
      PretextSample s;
      s.identity = i + 1;
      s.online = random_frames(pc.k, cfg, data);
      s.target = random_frames(1, cfg, data)[0];
      batch.samples.push_back(std::move(s));
    }
  }
  for (auto _ : state) {
    StepStats st = pretrain_step(batch, online, target, opt, pc);
    benchmark::DoNotOptimize(st.loss);
  }
}
BENCHMARK(bm_pretrain_step)->Arg(4)->Arg(6)->Arg(8);

void bm_finetune_step(benchmark::State& state) {
  BackboneConfig cfg = desk_config();
  Rng rng(3);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  Adam opt({1e-3, 0.9, 0.999, 1e-8});

  Rng data = rng.stream("data");
  ClipBatch batch;
  batch.P = 4;
  batch.K = 2;
  for (int i = 0; i < batch.P; ++i) {
    for (int j = 0; j < batch.K; ++j) {
      ClipSample s;
      s.identity = i + 1;
      s.frames = random_frames(static_cast<int>(state.range(0)), cfg, data);
      batch.samples.push_back(std::move(s));
    }
  }
  for (auto _ : state) {
    TripletStats st = finetune_step(batch, cfg, p, opt, 0.2);
    benchmark::DoNotOptimize(st.loss);
  }
}
BENCHMARK(bm_finetune_step)->Arg(6)->Arg(12);

void bm_rank1(benchmark::State& state) {
  const int ids = static_cast<int>(state.range(0));
  Rng rng(4);
  GallerySet gal;
  ProbeSet probe;
  for (int id = 1; id <= ids; ++id) {
    for (int view : {0, 18, 36}) {
      for (int s = 1; s <= 3; ++s) {
        EvalEntry e;
        e.emb = Tensor({3, 8});
        Rng r = rng.at(static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(view),
                       static_cast<std::uint64_t>(s));
        for (std::int64_t i = 0; i < e.emb.size(); ++i) e.emb[i] = r.uniform(-1.0, 1.0);
        e.identity = id;
        e.view = view;
        e.seq_index = s;
        if (s == 1) {
          probe.entries.push_back(std::move(e));
        } else {
          gal.entries.push_back(std::move(e));
        }
      }
    }
  }
  for (auto _ : state) {
    EvalMatrix m = rank1_matrix(gal, probe, true);
    benchmark::DoNotOptimize(m.grand_mean);
  }
}
BENCHMARK(bm_rank1)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();

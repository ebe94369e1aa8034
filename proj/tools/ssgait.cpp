#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssgait/checkpoint.hpp"
#include "ssgait/config.hpp"
#include "ssgait/dataset.hpp"
#include "ssgait/errors.hpp"
#include "ssgait/evaluate.hpp"
#include "ssgait/finetune.hpp"
#include "ssgait/pretrain.hpp"
#include "ssgait/report.hpp"
#include "ssgait/sampling.hpp"
#include "ssgait/synth.hpp"

namespace fs = std::filesystem;
using namespace ssgait;

namespace {

// Exclusive marker on the output directory; concurrent commands must not
// share mutable files.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir.string());
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw IoError("output directory is locked (another run in progress?): " +
                    path_.string());
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(fd_, pid.data(), pid.size());
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("short write on " + path.string());
}

struct CommonFlags {
  std::string config_path, seed, data_root, out, from_pretrained, ablation,
      exclude_iv, iterations, checkpoint;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value configuration file");
  cmd->add_option("--seed", f.seed, "root RNG seed (overrides config)");
  cmd->add_option("--data-root", f.data_root, "dataset directory");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--from-pretrained", f.from_pretrained,
                  "pre-training checkpoint to initialize from");
  cmd->add_option("--checkpoint", f.checkpoint, "checkpoint to evaluate");
  cmd->add_option("--ablation", f.ablation, "full | no_hpm | no_mtb");
  cmd->add_option("--exclude-identical-view", f.exclude_iv,
                  "true|false: drop identical-view pairs from evaluation");
  cmd->add_option("--iterations", f.iterations, "training steps");
  cmd->add_option("--set", f.sets, "KEY=VALUE config override (repeatable)");
}

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) load_config_file(f.config_path, cfg);
  if (!f.seed.empty()) cfg.set("seed", f.seed);
  if (!f.data_root.empty()) cfg.set("data_root", f.data_root);
  if (!f.out.empty()) cfg.set("out", f.out);
  if (!f.from_pretrained.empty()) cfg.set("from_pretrained", f.from_pretrained);
  if (!f.checkpoint.empty()) cfg.set("checkpoint", f.checkpoint);
  if (!f.ablation.empty()) cfg.set("ablation", f.ablation);
  if (!f.exclude_iv.empty()) cfg.set("exclude_identical_view", f.exclude_iv);
  if (!f.iterations.empty()) cfg.set("iterations", f.iterations);
  for (const std::string& kv : f.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void require_key(const std::string& v, const char* what) {
  if (v.empty()) throw ConfigError(std::string("missing required setting: ") + what);
}

DatasetIndex load_index(const RunConfig& cfg) {
  require_key(cfg.data_root, "data_root (--data-root)");
  DatasetIndex idx = cfg.dataset_layout == "ou_mvlp" ? index_ou_mvlp(cfg.data_root)
                                                     : index_casia_b(cfg.data_root);
  for (const std::string& w : idx.warnings) std::cerr << "warning: " << w << "\n";
  if (idx.sequences.empty()) throw NotEnoughData("no sequences under " + cfg.data_root);
  return idx;
}

IdentitySplit split_of(const RunConfig& cfg, const DatasetIndex& idx) {
  if (cfg.protocol == "casia_b_lt") return protocol_split(idx, Protocol::CasiaBLt);
  if (cfg.protocol == "ou_mvlp") return protocol_split(idx, Protocol::OuMvlp);
  IdentitySplit custom;
  std::vector<int> ids = idx.identities();
  const size_t ntrain = std::min(ids.size(), static_cast<size_t>(cfg.train_count));
  custom.train_ids.assign(ids.begin(), ids.begin() + static_cast<long>(ntrain));
  custom.test_ids.assign(ids.begin() + static_cast<long>(ntrain), ids.end());
  return protocol_split(idx, Protocol::Custom, &custom);
}

DatasetIndex subset_by_ids(const DatasetIndex& idx, const std::vector<int>& ids) {
  DatasetIndex out;
  for (const GaitSequence& s : idx.sequences) {
    if (std::find(ids.begin(), ids.end(), s.identity) != ids.end()) {
      out.sequences.push_back(s);
    }
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_synth(const RunConfig& cfg) {
  require_key(cfg.out, "out (--out)");
  DirLock lock(cfg.out);
  write_text(fs::path(cfg.out) / "resolved.cfg", cfg.resolved_text());
  materialize_synthetic_dataset(cfg.synth_config(), cfg.out);
  write_text(fs::path(cfg.out) / "manifest.txt",
             "synthetic gait dataset\n\n" + cfg.resolved_text());
  std::cout << "dataset written to " << cfg.out << "\n";
  return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
  require_key(cfg.out, "out (--out)");
  DatasetIndex idx = load_index(cfg);
  DirLock lock(cfg.out);
  write_text(fs::path(cfg.out) / "resolved.cfg", cfg.resolved_text());

  const IdentitySplit split = split_of(cfg, idx);
  if (split.train_ids.empty()) throw NotEnoughData("training split is empty");
  FrameStore store(idx);
  BatchSampler sampler(idx, split.train_ids, store);

  Rng root(cfg.seed);
  Rng init_rng = root.stream("init");
  Rng sample_rng = root.stream("sampling");

  OnlineNetwork online;
  online.init(cfg.backbone_config(), cfg.d2, init_rng);
  TargetNetwork target;
  target.init_from(online);
  Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  const PretrainConfig pc = cfg.pretrain_config();

  std::ofstream log(fs::path(cfg.out) / "train_log.csv", std::ios::trunc);
  log << "step,loss,y_tar_std_min,wallclock\n";
  const auto t0 = std::chrono::steady_clock::now();

  for (int step = 1; step <= cfg.iterations; ++step) {
    PretextBatch batch = sampler.sample_pretext(cfg.P, cfg.K, cfg.k, sample_rng,
                                                PadPolicy::Loop);
    StepStats stats;
    try {
      stats = pretrain_step(batch, online, target, opt, pc);
    } catch (const NumericError&) {
      save_checkpoint(pack_pretrain(online, target, static_cast<std::uint64_t>(step),
                                    cfg.resolved_text()),
                      (fs::path(cfg.out) / "checkpoint_abort.ckpt").string());
      std::cerr << "state dumped to checkpoint_abort.ckpt\n";
      throw;
    }
    if (step % cfg.log_every == 0 || step == cfg.iterations) {
      char row[160];
      std::snprintf(row, sizeof(row), "%d,%.10g,%.10g,%.3f\n", step, stats.loss,
                    stats.y_tar_std_min, seconds_since(t0));
      log << row;
    }
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06d.ckpt", step);
      save_checkpoint(pack_pretrain(online, target, static_cast<std::uint64_t>(step),
                                    cfg.resolved_text()),
                      (fs::path(cfg.out) / name).string());
    }
  }
  const fs::path final_path = fs::path(cfg.out) / "checkpoint_final.ckpt";
  save_checkpoint(pack_pretrain(online, target, static_cast<std::uint64_t>(cfg.iterations),
                                cfg.resolved_text()),
                  final_path.string());
  std::cout << final_path.string() << "\n";
  return 0;
}

int cmd_finetune(const RunConfig& cfg) {
  require_key(cfg.out, "out (--out)");
  if (cfg.K < 2) throw ConfigError("fine-tuning needs K >= 2 (triplet positives)");
  if (cfg.P < 2) throw ConfigError("fine-tuning needs P >= 2 (triplet negatives)");
  DatasetIndex idx = load_index(cfg);
  DirLock lock(cfg.out);
  write_text(fs::path(cfg.out) / "resolved.cfg", cfg.resolved_text());

  const IdentitySplit split = split_of(cfg, idx);
  if (split.train_ids.empty()) throw NotEnoughData("training split is empty");
  FrameStore store(idx);
  BatchSampler sampler(idx, split.train_ids, store);

  Rng root(cfg.seed);
  Rng init_rng = root.stream("init");
  Rng sample_rng = root.stream("sampling");

  const BackboneConfig bc = cfg.backbone_config();
  BackboneParams params;
  params.init(bc, init_rng);
  if (!cfg.from_pretrained.empty()) {
    unpack_backbone_from_pretrain(load_checkpoint(cfg.from_pretrained), bc, params);
  }
  Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

  std::ofstream log(fs::path(cfg.out) / "train_log.csv", std::ios::trunc);
  log << "step,loss,active_triples,wallclock\n";
  const auto t0 = std::chrono::steady_clock::now();

  for (int step = 1; step <= cfg.iterations; ++step) {
    ClipBatch batch = sampler.sample_clips(cfg.P, cfg.K, cfg.clip_len, sample_rng,
                                           PadPolicy::Loop);
    TripletStats stats;
    try {
      stats = finetune_step(batch, bc, params, opt, cfg.margin);
    } catch (const NumericError&) {
      save_checkpoint(pack_backbone(bc, params, static_cast<std::uint64_t>(step),
                                    cfg.resolved_text()),
                      (fs::path(cfg.out) / "checkpoint_abort.ckpt").string());
      std::cerr << "state dumped to checkpoint_abort.ckpt\n";
      throw;
    }
    if (step % cfg.log_every == 0 || step == cfg.iterations) {
      char row[160];
      std::snprintf(row, sizeof(row), "%d,%.10g,%lld,%.3f\n", step, stats.loss,
                    static_cast<long long>(stats.active), seconds_since(t0));
      log << row;
    }
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06d.ckpt", step);
      save_checkpoint(pack_backbone(bc, params, static_cast<std::uint64_t>(step),
                                    cfg.resolved_text()),
                      (fs::path(cfg.out) / name).string());
    }
  }
  const fs::path final_path = fs::path(cfg.out) / "checkpoint_final.ckpt";
  save_checkpoint(pack_backbone(bc, params, static_cast<std::uint64_t>(cfg.iterations),
                                cfg.resolved_text()),
                  final_path.string());
  std::cout << final_path.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  require_key(cfg.out, "out (--out)");
  require_key(cfg.checkpoint, "checkpoint (--checkpoint)");
  DatasetIndex idx = load_index(cfg);
  DirLock lock(cfg.out);
  write_text(fs::path(cfg.out) / "resolved.cfg", cfg.resolved_text());

  const BackboneConfig bc = cfg.backbone_config();
  BackboneParams params;
  Rng root(cfg.seed);
  params.init(bc, root.stream("init"));
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  if (ck.phase == "finetune") {
    unpack_backbone(ck, bc, params);
  } else {
    unpack_backbone_from_pretrain(ck, bc, params);
  }

  const IdentitySplit split = split_of(cfg, idx);
  if (split.test_ids.empty()) throw NotEnoughData("test split is empty");
  DatasetIndex test_idx = subset_by_ids(idx, split.test_ids);
  FrameStore store(test_idx);

  const EvalProtocol ep =
      cfg.eval_protocol == "casia_b" ? EvalProtocol::CasiaB : EvalProtocol::SeqSplit;
  ProtocolSets sets = build_protocol_sets(test_idx, store, bc, params, ep,
                                          2 * cfg.radius + 1);
  for (const std::string& w : sets.warnings) std::cerr << "warning: " << w << "\n";

  std::vector<EvalMatrix> matrices;
  for (const ProbeSet& probe : sets.probes) {
    matrices.push_back(rank1_matrix(sets.gallery, probe, cfg.exclude_identical_view));
  }
  const TableLayout layout =
      cfg.dataset_layout == "ou_mvlp" ? TableLayout::ViewRows : TableLayout::ViewColumns;
  const Report report = render_report(matrices, layout);
  write_text(fs::path(cfg.out) / "report.txt", report.text);
  write_text(fs::path(cfg.out) / "report.csv", report.csv);

  std::cout << report.text;
  for (const EvalMatrix& m : matrices) {
    std::printf("%s grand mean: %.4f\n", condition_name(m.cond), m.grand_mean);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silhouette gait pipeline: synthesize, pre-train, fine-tune, evaluate"};
  app.require_subcommand(1);

  CommonFlags synth_f, pre_f, fine_f, eval_f;
  CLI::App* synth = app.add_subcommand("synth", "render a synthetic walking dataset");
  add_common(synth, synth_f);
  CLI::App* pre = app.add_subcommand("pretrain", "self-supervised pre-training");
  add_common(pre, pre_f);
  CLI::App* fine = app.add_subcommand("finetune", "supervised triplet fine-tuning");
  add_common(fine, fine_f);
  CLI::App* ev = app.add_subcommand("eval", "gallery/probe rank-1 evaluation");
  add_common(ev, eval_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(resolve_config(synth_f));
    if (pre->parsed()) return cmd_pretrain(resolve_config(pre_f));
    if (fine->parsed()) return cmd_finetune(resolve_config(fine_f));
    if (ev->parsed()) return cmd_eval(resolve_config(eval_f));
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}

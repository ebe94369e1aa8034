#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssgait/backbone.hpp"
#include "ssgait/pretrain.hpp"
#include "ssgait/synth.hpp"

namespace ssgait {

// Flat key=value run configuration shared by all commands. Every key is
// validated against the schema below; unknown keys are hard errors. Flags
// given on the command line override file values. Each run writes its
// resolved configuration back out so the run can be reproduced from it.
struct RunConfig {
  // Data.
  std::string data_root;
  std::string dataset_layout = "casia_b";  // casia_b | ou_mvlp
  std::string protocol = "first_n";        // casia_b_lt | ou_mvlp | first_n
  int train_count = 8;                     // first_n: leading identities train
  // Model.
  int scales = 5;
  int radius = 1;
  int c = 128;   // spatial stripe width
  int d1 = 128;  // temporal/embedding width (must equal c)
  int d2 = 256;  // pre-training head width
  int cnn_mid = 32;
  int cnn_out = 64;
  std::string ablation = "full";
  // Training.
  int P = 8;
  int K = 2;
  int k = 30;        // pretext online frames
  int clip_len = 30; // fine-tuning clip length
  double lr = 1e-4;
  double tau = 0.99;
  double margin = 0.2;
  int iterations = 500;
  std::uint64_t seed = 1;
  int log_every = 1;
  int checkpoint_every = 0;  // 0: final checkpoint only
  // Paths.
  std::string out;
  std::string from_pretrained;
  std::string checkpoint;
  // Evaluation.
  bool exclude_identical_view = true;
  std::string eval_protocol = "seq_split";  // casia_b | seq_split
  // Synthetic data.
  int synth_ids = 8;
  int synth_seqs = 4;
  int synth_frames = 40;
  std::string synth_views = "0,18";
  std::string synth_conditions = "nm";

  // Sets one key from its text form; unknown keys and malformed values throw
  // ConfigError.
  void set(const std::string& key, const std::string& value);
  // Cross-field consistency checks (throws ConfigError).
  void validate() const;
  // Canonical text form, one `key = value` line per schema entry.
  std::string resolved_text() const;

  BackboneConfig backbone_config() const;
  PretrainConfig pretrain_config() const;
  SynthConfig synth_config() const;

  std::vector<int> views_list() const;
  std::vector<Condition> conditions_list() const;
};

// Reads `key = value` lines ( # starts a comment) into cfg.
void load_config_file(const std::string& path, RunConfig& cfg);

std::vector<int> parse_int_list(const std::string& csv, const std::string& what);

}  // namespace ssgait

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ssgait/config.hpp"
#include "ssgait/errors.hpp"

using namespace ssgait;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& content) {
    path = fs::temp_directory_path() / ("ssgait_cfg_" + std::to_string(::getpid()) + ".cfg");
    std::ofstream f(path);
    f << content;
  }
  ~TempFile() { fs::remove(path); }
};

}  // namespace

TEST_CASE("the defaults are a valid configuration") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.backbone_config().n_stripes() == 31);
  CHECK(cfg.pretrain_config().d2 == 256);
  CHECK(cfg.synth_config().n_identities == 8);
  CHECK(cfg.views_list() == std::vector<int>{0, 18});
  CHECK(cfg.conditions_list() == std::vector<Condition>{Condition::NM});
}

TEST_CASE("keys are set from text with strict parsing") {
  RunConfig cfg;
  cfg.set("lr", "0.03");
  CHECK(cfg.lr == 0.03);
  cfg.set("seed", "42");
  CHECK(cfg.seed == 42);
  cfg.set("exclude_identical_view", "false");
  CHECK_FALSE(cfg.exclude_identical_view);
  cfg.set("exclude_identical_view", "1");
  CHECK(cfg.exclude_identical_view);
  cfg.set("ablation", "no_mtb");
  CHECK(cfg.ablation == "no_mtb");
  cfg.set("synth_views", "0, 18, 36");
  CHECK(cfg.views_list() == std::vector<int>{0, 18, 36});

  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("iterations", "abc"), ConfigError);
  CHECK_THROWS_AS(cfg.set("iterations", "12.5"), ConfigError);
  CHECK_THROWS_AS(cfg.set("lr", "fast"), ConfigError);
  CHECK_THROWS_AS(cfg.set("seed", "-3"), ConfigError);
  CHECK_THROWS_AS(cfg.set("exclude_identical_view", "maybe"), ConfigError);
}

TEST_CASE("cross-field validation catches inconsistent settings") {
  RunConfig cfg;
  cfg.set("c", "64");  // d1 still 128
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.set("d1", "64");
  CHECK_NOTHROW(cfg.validate());

  RunConfig bad;
  bad.set("tau", "1.5");
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = RunConfig{};
  bad.set("ablation", "none");
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = RunConfig{};
  bad.set("eval_protocol", "both");
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = RunConfig{};
  bad.set("synth_conditions", "nm,xx");
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = RunConfig{};
  bad.set("synth_views", " , ");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config files allow comments and blank lines, reject malformed lines") {
  TempFile file(
      "# training setup\n"
      "lr = 0.03   # inline comment\n"
      "\n"
      "P = 6\n"
      "synth_views = 0,18,36\n");
  RunConfig cfg;
  load_config_file(file.path.string(), cfg);
  CHECK(cfg.lr == 0.03);
  CHECK(cfg.P == 6);
  CHECK(cfg.synth_views == "0,18,36");

  TempFile broken("lr 0.03\n");
  RunConfig c2;
  CHECK_THROWS_AS(load_config_file(broken.path.string(), c2), ConfigError);

  TempFile unknown("velocity = 9\n");
  RunConfig c3;
  CHECK_THROWS_AS(load_config_file(unknown.path.string(), c3), ConfigError);

  RunConfig c4;
  CHECK_THROWS_AS(load_config_file("/no/such/file.cfg", c4), ConfigError);
}

TEST_CASE("resolved text reloads to the identical configuration") {
  RunConfig cfg;
  cfg.set("lr", "0.0305");
  cfg.set("seed", "987654321");
  cfg.set("tau", "0.9");
  cfg.set("ablation", "no_hpm");
  cfg.set("out", "/tmp/run7");
  cfg.set("synth_views", "0,18,36");
  cfg.set("exclude_identical_view", "false");

  TempFile file(cfg.resolved_text());
  RunConfig back;
  load_config_file(file.path.string(), back);
  CHECK(back.resolved_text() == cfg.resolved_text());
  CHECK(back.lr == cfg.lr);
  CHECK(back.seed == cfg.seed);
  CHECK(back.ablation == cfg.ablation);
  CHECK(back.out == cfg.out);
  CHECK_FALSE(back.exclude_identical_view);
}

TEST_CASE("derived configurations mirror the flat keys") {
  RunConfig cfg;
  cfg.set("scales", "2");
  cfg.set("radius", "3");
  cfg.set("c", "8");
  cfg.set("d1", "8");
  cfg.set("d2", "16");
  cfg.set("cnn_mid", "4");
  cfg.set("cnn_out", "8");
  cfg.set("ablation", "no_mtb");
  cfg.set("iterations", "77");
  cfg.set("lr", "0.5");
  cfg.set("tau", "0.25");
  cfg.set("synth_ids", "12");
  cfg.set("synth_seqs", "3");
  cfg.set("synth_frames", "9");
  cfg.set("seed", "11");
  cfg.validate();

  BackboneConfig bc = cfg.backbone_config();
  CHECK(bc.scales == 2);
  CHECK(bc.radius == 3);
  CHECK(bc.stripe_dim == 8);
  CHECK(bc.embed_dim == 8);
  CHECK(bc.cnn_mid == 4);
  CHECK(bc.cnn_out == 8);
  CHECK(bc.ablation == Ablation::NoMtb);

  PretrainConfig pc = cfg.pretrain_config();
  CHECK(pc.iterations == 77);
  CHECK(pc.lr == 0.5);
  CHECK(pc.tau == 0.25);
  CHECK(pc.d2 == 16);

  SynthConfig sc = cfg.synth_config();
  CHECK(sc.n_identities == 12);
  CHECK(sc.sequences_per_identity == 3);
  CHECK(sc.frames_per_sequence == 9);
  CHECK(sc.seed == 11);
}

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ssgait/backbone.hpp"
#include "ssgait/errors.hpp"
#include "ssgait/rng.hpp"

using namespace ssgait;

namespace {

// Small everything so finite differences stay cheap.
BackboneConfig tiny_config() {
  BackboneConfig cfg;
  cfg.height = 8;
  cfg.width = 8;
  cfg.scales = 2;  // n = 3, fm 4x4
  cfg.radius = 1;
  cfg.stripe_dim = 4;
  cfg.embed_dim = 4;
  cfg.cnn_mid = 2;
  cfg.cnn_out = 3;
  return cfg;
}

std::vector<Silhouette> random_frames(int T, const BackboneConfig& cfg, Rng& rng) {
  std::vector<Silhouette> out;
  for (int t = 0; t < T; ++t) {
    Silhouette f(cfg.height, cfg.width);
    for (double& v : f.px) v = rng.uniform();
    out.push_back(std::move(f));
  }
  return out;
}

double weighted_sum(const Tensor& y, const std::vector<double>& w) {
  double s = 0.0;
  for (std::int64_t i = 0; i < y.size(); ++i) s += w[static_cast<size_t>(i)] * y[i];
  return s;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-6);
}

}  // namespace

TEST_CASE("strip layout is scale-major, top to bottom") {
  auto strips = strip_layout(4, 2);
  REQUIRE(strips.size() == 3);
  CHECK(strips[0].y0 == 0);
  CHECK(strips[0].rows == 4);
  CHECK(strips[1].y0 == 0);
  CHECK(strips[1].rows == 2);
  CHECK(strips[2].y0 == 2);
  CHECK(strips[2].rows == 2);

  auto deep = strip_layout(8, 3);
  REQUIRE(deep.size() == 7);
  CHECK(deep[3].y0 == 0);
  CHECK(deep[3].rows == 2);
  CHECK(deep[6].y0 == 6);

  CHECK_THROWS_AS(strip_layout(6, 3), IndivisibleHeight);
}

TEST_CASE("config validation rejects inconsistent dimensions") {
  BackboneConfig cfg;  // defaults are valid
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.n_stripes() == 31);

  BackboneConfig bad = cfg;
  bad.height = 36;  // fm_h 18, not divisible into 16 strips
  CHECK_THROWS_AS(bad.validate(), IndivisibleHeight);

  bad = cfg;
  bad.stripe_dim = 64;  // must match embed_dim
  CHECK_THROWS_AS(bad.validate(), ShapeMismatch);

  bad = cfg;
  bad.height = 63;
  CHECK_THROWS_AS(bad.validate(), ShapeMismatch);
}

TEST_CASE("sequence descriptor has one row per pyramid strip") {
  BackboneConfig cfg;  // 64x44, S=5, d1=128
  Rng rng(11);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  Rng data = rng.stream("data");
  auto frames = random_frames(3, cfg, data);
  Tensor y = backbone_forward(frames, cfg, p, nullptr);
  REQUIRE(y.ndim() == 2);
  CHECK(y.dim(0) == 31);
  CHECK(y.dim(1) == 128);
  CHECK(y.all_finite());

  BackboneConfig one = tiny_config();
  one.scales = 1;
  BackboneParams q;
  q.init(one, rng.stream("init"));
  Rng d2 = rng.stream("data2");
  Tensor y1 = backbone_forward(random_frames(3, one, d2), one, q, nullptr);
  CHECK(y1.dim(0) == 1);
  CHECK(y1.dim(1) == one.embed_dim);
}

TEST_CASE("strip pooling adds max and mean per channel") {
  BackboneConfig cfg = tiny_config();
  cfg.stripe_dim = 3;  // identity maps need stripe_dim == cnn_out
  cfg.embed_dim = 3;
  Rng rng(3);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  const int n = cfg.n_stripes();
  for (int i = 0; i < n; ++i) {
    p.hpm_w[static_cast<size_t>(i)].value.zero();
    for (int j = 0; j < cfg.stripe_dim; ++j) p.hpm_w[static_cast<size_t>(i)].value(j, j) = 1.0;
    p.hpm_b[static_cast<size_t>(i)].value.zero();
  }

  // Per-channel constant map: max == mean == v, so every strip row is 2v.
  Tensor fm({cfg.cnn_out, cfg.fm_h(), cfg.fm_w()});
  const double vals[3] = {0.5, -1.25, 2.0};
  for (int ch = 0; ch < 3; ++ch) {
    double* plane = fm.row(ch);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(cfg.fm_h()) * cfg.fm_w(); ++i) {
      plane[i] = vals[ch];
    }
  }
  Tensor rows = spatial_forward(fm, cfg, p, nullptr);
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      CHECK(rows(i, ch) == doctest::Approx(2.0 * vals[ch]).epsilon(1e-12));
    }
  }

  // One hot pixel in the top half: strips covering it see max lifted.
  fm.zero();
  fm(0, 0, 1) = 3.0;  // channel 0, row 0
  rows = spatial_forward(fm, cfg, p, nullptr);
  const double area_all = static_cast<double>(cfg.fm_h()) * cfg.fm_w();
  const double area_half = area_all / 2.0;
  CHECK(rows(0, 0) == doctest::Approx(3.0 + 3.0 / area_all));
  CHECK(rows(1, 0) == doctest::Approx(3.0 + 3.0 / area_half));
  CHECK(rows(2, 0) == doctest::Approx(0.0));
}

TEST_CASE("pyramid strips only see their own rows") {
  BackboneConfig cfg = tiny_config();
  Rng rng(9);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));

  Tensor fm({cfg.cnn_out, cfg.fm_h(), cfg.fm_w()});
  Rng data = rng.stream("fm");
  for (std::int64_t i = 0; i < fm.size(); ++i) fm[i] = data.uniform(-1.0, 1.0);
  Tensor base = spatial_forward(fm, cfg, p, nullptr);

  Tensor bumped = fm;
  bumped(1, 3, 2) += 0.7;  // bottom half (rows 2..3)
  Tensor rows = spatial_forward(bumped, cfg, p, nullptr);

  bool global_changed = false, bottom_changed = false;
  for (int j = 0; j < cfg.stripe_dim; ++j) {
    CHECK(rows(1, j) == base(1, j));  // top strip untouched, bit for bit
    global_changed |= rows(0, j) != base(0, j);
    bottom_changed |= rows(2, j) != base(2, j);
  }
  CHECK(global_changed);
  CHECK(bottom_changed);
}

TEST_CASE("plain spatial head broadcasts one row to every stripe") {
  BackboneConfig cfg = tiny_config();
  cfg.ablation = Ablation::NoHpm;
  Rng rng(5);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  Tensor fm({cfg.cnn_out, cfg.fm_h(), cfg.fm_w()});
  Rng data = rng.stream("fm");
  for (std::int64_t i = 0; i < fm.size(); ++i) fm[i] = data.uniform(-1.0, 1.0);
  Tensor rows = spatial_forward(fm, cfg, p, nullptr);
  REQUIRE(rows.dim(0) == 3);
  for (int i = 1; i < rows.dim(0); ++i) {
    for (int j = 0; j < rows.dim(1); ++j) CHECK(rows(i, j) == rows(0, j));
  }
}

TEST_CASE("a temporally constant stripe sequence reduces to its single-frame response") {
  BackboneConfig cfg = tiny_config();
  Rng rng(21);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  const int n = cfg.n_stripes(), c = cfg.stripe_dim, d1 = cfg.embed_dim;
  const int taps = 2 * cfg.radius + 1;
  const int T = 6;

  Tensor x({n, c});
  Rng data = rng.stream("x");
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = data.uniform(-1.0, 1.0);
  Tensor stripes({n, T, c});
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < c; ++j) stripes(i, t, j) = x(i, j);
    }
  }

  Tensor y = temporal_forward(stripes, cfg, p, nullptr);

  // Hand oracle: bins(lrelu(b + sum_j w_j . x)) per stripe.
  for (int i = 0; i < n; ++i) {
    const Param& w = p.tcn_w[static_cast<size_t>(i)];
    const Param& b = p.tcn_b[static_cast<size_t>(i)];
    std::vector<double> h(static_cast<size_t>(d1));
    for (int o = 0; o < d1; ++o) {
      double s = b.value(o);
      for (int j = 0; j < taps; ++j) {
        for (int ch = 0; ch < c; ++ch) s += w.value(o, j, ch) * x(i, ch);
      }
      h[static_cast<size_t>(o)] = s < 0.0 ? s * cfg.lrelu_alpha : s;
    }
    for (int o = 0; o < d1; ++o) {
      double s = p.bin_b[static_cast<size_t>(i)].value(o);
      for (int j = 0; j < d1; ++j) {
        s += p.bin_w[static_cast<size_t>(i)].value(o, j) * h[static_cast<size_t>(j)];
      }
      CHECK(rel_err(y(i, o), s) < 1e-12);
    }
  }

  // Same reduction under the shared-kernel averaging variant.
  BackboneConfig avg = cfg;
  avg.ablation = Ablation::NoMtb;
  Tensor ya = temporal_forward(stripes, avg, p, nullptr);
  for (int i = 0; i < n; ++i) {
    std::vector<double> h(static_cast<size_t>(d1));
    for (int o = 0; o < d1; ++o) {
      double s = p.stb.value(o);
      for (int j = 0; j < taps; ++j) {
        for (int ch = 0; ch < c; ++ch) s += p.stw.value(o, j, ch) * x(i, ch);
      }
      h[static_cast<size_t>(o)] = s < 0.0 ? s * cfg.lrelu_alpha : s;
    }
    for (int o = 0; o < d1; ++o) {
      double s = p.bin_b[static_cast<size_t>(i)].value(o);
      for (int j = 0; j < d1; ++j) {
        s += p.bin_w[static_cast<size_t>(i)].value(o, j) * h[static_cast<size_t>(j)];
      }
      CHECK(rel_err(ya(i, o), s) < 1e-12);
    }
  }
}

TEST_CASE("radius zero makes the temporal kernel pointwise") {
  BackboneConfig cfg = tiny_config();
  cfg.radius = 0;
  Rng rng(13);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  const int n = cfg.n_stripes(), c = cfg.stripe_dim;

  Tensor one({n, 1, c});
  Tensor rep({n, 4, c});
  Rng data = rng.stream("x");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      const double v = data.uniform(-1.0, 1.0);
      one(i, 0, j) = v;
      for (int t = 0; t < 4; ++t) rep(i, t, j) = v;
    }
  }
  Tensor y1 = temporal_forward(one, cfg, p, nullptr);
  Tensor y4 = temporal_forward(rep, cfg, p, nullptr);
  for (std::int64_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y4[i]);
}

TEST_CASE("output maps apply one affine per stripe") {
  BackboneConfig cfg = tiny_config();
  Rng rng(17);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  const int n = cfg.n_stripes(), d1 = cfg.embed_dim;

  Tensor rows({n, d1});
  Rng data = rng.stream("rows");
  for (std::int64_t i = 0; i < rows.size(); ++i) rows[i] = data.uniform(-1.0, 1.0);

  Tensor out = fc_bins_apply(rows, p);
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < d1; ++o) {
      double s = p.bin_b[static_cast<size_t>(i)].value(o);
      for (int j = 0; j < d1; ++j) s += p.bin_w[static_cast<size_t>(i)].value(o, j) * rows(i, j);
      CHECK(rel_err(out(i, o), s) < 1e-12);
    }
  }

  // Zero input returns each stripe's bias.
  Tensor zero({n, d1});
  Tensor bias = fc_bins_apply(zero, p);
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < d1; ++o) CHECK(bias(i, o) == p.bin_b[static_cast<size_t>(i)].value(o));
  }

  // Identity maps pass rows through.
  for (int i = 0; i < n; ++i) {
    p.bin_w[static_cast<size_t>(i)].value.zero();
    for (int j = 0; j < d1; ++j) p.bin_w[static_cast<size_t>(i)].value(j, j) = 1.0;
    p.bin_b[static_cast<size_t>(i)].value.zero();
  }
  Tensor same = fc_bins_apply(rows, p);
  for (std::int64_t i = 0; i < rows.size(); ++i) CHECK(same[i] == rows[i]);
}

TEST_CASE("too few frames is an error, not a silent pad") {
  BackboneConfig cfg = tiny_config();
  Rng rng(1);
  BackboneParams p;
  p.init(cfg, rng.stream("init"));
  CHECK_THROWS_AS(backbone_forward({}, cfg, p, nullptr), SequenceTooShort);

  Rng data = rng.stream("data");
  auto frames = random_frames(2, cfg, data);  // radius 1 needs 3
  CHECK_THROWS_AS(backbone_forward(frames, cfg, p, nullptr), SequenceTooShort);

  Tensor stripes({cfg.n_stripes(), 2, cfg.stripe_dim});
  CHECK_THROWS_AS(temporal_forward(stripes, cfg, p, nullptr), SequenceTooShort);
}

TEST_CASE("forward passes and initialization are deterministic") {
  BackboneConfig cfg = tiny_config();
  Rng a(77), b(77);
  BackboneParams pa, pb;
  pa.init(cfg, a.stream("init"));
  pb.init(cfg, b.stream("init"));
  for (const Param* x : pa.active(cfg)) {
    bool found = false;
    for (const Param* y : pb.active(cfg)) {
      if (y->name != x->name) continue;
      found = true;
      REQUIRE(x->value.size() == y->value.size());
      for (std::int64_t i = 0; i < x->value.size(); ++i) CHECK(x->value[i] == y->value[i]);
    }
    CHECK(found);
  }

  Rng data(5);
  auto frames = random_frames(4, cfg, data);
  Tensor y1 = backbone_forward(frames, cfg, pa, nullptr);
  Tensor y2 = backbone_forward(frames, cfg, pa, nullptr);
  for (std::int64_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
}

TEST_CASE("whole-pipeline gradients match finite differences") {
  for (Ablation ab : {Ablation::Full, Ablation::NoHpm, Ablation::NoMtb}) {
    CAPTURE(ablation_name(ab));
    BackboneConfig cfg = tiny_config();
    cfg.ablation = ab;
    Rng rng(31);
    BackboneParams p;
    p.init(cfg, rng.stream("init"));
    Rng data = rng.stream("data");
    auto frames = random_frames(3, cfg, data);

    Tensor y0 = backbone_forward(frames, cfg, p, nullptr);
    std::vector<double> lw(static_cast<size_t>(y0.size()));
    Rng lrng = rng.stream("loss");
    for (double& v : lw) v = lrng.uniform(-1.0, 1.0);

    BackboneTrace tr;
    Tensor y = backbone_forward(frames, cfg, p, &tr);
    Tensor gout(y.shape());
    for (std::int64_t i = 0; i < gout.size(); ++i) gout[i] = lw[static_cast<size_t>(i)];
    p.zero_grads(cfg);
    backbone_backward(tr, cfg, gout, p);

    const double h = 1e-5;
    for (Param* prm : p.active(cfg)) {
      Rng pick = rng.stream(prm->name + ".probe");
      const int probes = prm->value.size() < 4 ? static_cast<int>(prm->value.size()) : 4;
      for (int k = 0; k < probes; ++k) {
        const std::int64_t i = pick.uniform_int(0, prm->value.size() - 1);
        const double keep = prm->value[i];
        prm->value[i] = keep + h;
        const double up = weighted_sum(backbone_forward(frames, cfg, p, nullptr), lw);
        prm->value[i] = keep - h;
        const double dn = weighted_sum(backbone_forward(frames, cfg, p, nullptr), lw);
        prm->value[i] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double an = prm->grad[i];
        CAPTURE(prm->name);
        CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4}) < 2e-4);
      }
    }

    // Backward accumulates: a second pass doubles every gradient.
    Tensor snap = p.active(cfg)[0]->grad;
    backbone_backward(tr, cfg, gout, p);
    const Tensor& twice = p.active(cfg)[0]->grad;
    for (std::int64_t i = 0; i < snap.size(); ++i) {
      CHECK(twice[i] == doctest::Approx(2.0 * snap[i]).epsilon(1e-12));
    }
  }
}

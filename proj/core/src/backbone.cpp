#include "ssgait/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssgait/errors.hpp"
#include "ssgait/layers.hpp"

namespace ssgait {

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoHpm: return "no_hpm";
    case Ablation::NoMtb: return "no_mtb";
  }
  return "full";
}

std::optional<Ablation> parse_ablation(std::string_view s) {
  if (s == "full") return Ablation::Full;
  if (s == "no_hpm") return Ablation::NoHpm;
  if (s == "no_mtb") return Ablation::NoMtb;
  return std::nullopt;
}

void BackboneConfig::validate() const {
  if (height < 4 || width < 4 || height % 2 != 0 || width % 2 != 0) {
    throw ShapeMismatch("backbone: input must be even-sized and at least 4x4");
  }
  if (scales < 1 || radius < 0 || stripe_dim < 1 || embed_dim < 1 || cnn_mid < 1 ||
      cnn_out < 1) {
    throw ShapeMismatch("backbone: dimensions must be positive");
  }
  if (stripe_dim != embed_dim) {
    // The per-stripe output maps double as the target branch's stripe maps on
    // single-frame rows, so both widths must agree.
    throw ShapeMismatch("backbone: stripe_dim must equal embed_dim, got " +
                        std::to_string(stripe_dim) + " vs " + std::to_string(embed_dim));
  }
  const int finest = 1 << (scales - 1);
  if (fm_h() % finest != 0) {
    throw IndivisibleHeight("feature-map height " + std::to_string(fm_h()) +
                            " not divisible by " + std::to_string(finest) +
                            " strips (scales=" + std::to_string(scales) + ")");
  }
}

std::vector<Strip> strip_layout(int fm_h, int scales) {
  std::vector<Strip> out;
  for (int s = 1; s <= scales; ++s) {
    const int m = 1 << (s - 1);
    if (fm_h % m != 0) {
      throw IndivisibleHeight("feature-map height " + std::to_string(fm_h) +
                              " not divisible into " + std::to_string(m) + " strips");
    }
    const int rows = fm_h / m;
    for (int j = 0; j < m; ++j) out.push_back({j * rows, rows});
  }
  return out;
}

namespace {

void init_param(Param& p, const Rng& rng, double std) {
  Rng r = rng.stream(p.name);
  double* v = p.value.data();
  for (std::int64_t i = 0; i < p.value.size(); ++i) v[i] = std * r.normal();
}

double he_std(std::int64_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

}  // namespace

void BackboneParams::init(const BackboneConfig& cfg, const Rng& rng) {
  cfg.validate();
  const int n = cfg.n_stripes();
  const int c = cfg.stripe_dim, d1 = cfg.embed_dim;
  const int mid = cfg.cnn_mid, out = cfg.cnn_out;
  const int taps = 2 * cfg.radius + 1;

  c1w = Param("cnn.1.w", {mid, 1, 5, 5});
  c1b = Param("cnn.1.b", {mid});
  c2w = Param("cnn.2.w", {mid, mid, 3, 3});
  c2b = Param("cnn.2.b", {mid});
  c3w = Param("cnn.3.w", {out, mid, 3, 3});
  c3b = Param("cnn.3.b", {out});
  init_param(c1w, rng, he_std(25));
  init_param(c2w, rng, he_std(static_cast<std::int64_t>(mid) * 9));
  init_param(c3w, rng, he_std(static_cast<std::int64_t>(mid) * 9));

  hpm_w.clear();
  hpm_b.clear();
  tcn_w.clear();
  tcn_b.clear();
  bin_w.clear();
  bin_b.clear();
  for (int i = 0; i < n; ++i) {
    const std::string tag = std::to_string(i);
    hpm_w.emplace_back("hpm." + tag + ".w", std::vector<int>{c, out});
    hpm_b.emplace_back("hpm." + tag + ".b", std::vector<int>{c});
    tcn_w.emplace_back("tcn." + tag + ".w", std::vector<int>{d1, taps, c});
    tcn_b.emplace_back("tcn." + tag + ".b", std::vector<int>{d1});
    bin_w.emplace_back("bins." + tag + ".w", std::vector<int>{d1, d1});
    bin_b.emplace_back("bins." + tag + ".b", std::vector<int>{d1});
    init_param(hpm_w.back(), rng, he_std(out));
    init_param(tcn_w.back(), rng, he_std(static_cast<std::int64_t>(taps) * c));
    init_param(bin_w.back(), rng, he_std(d1));
  }

  p1w = Param("plain.1.w", {out, out, 3, 3});
  p1b = Param("plain.1.b", {out});
  p2w = Param("plain.2.w", {out, out, 3, 3});
  p2b = Param("plain.2.b", {out});
  p3w = Param("plain.3.w", {out, out, 3, 3});
  p3b = Param("plain.3.b", {out});
  pfw = Param("plain.fc.w", {c, out});
  pfb = Param("plain.fc.b", {c});
  init_param(p1w, rng, he_std(static_cast<std::int64_t>(out) * 9));
  init_param(p2w, rng, he_std(static_cast<std::int64_t>(out) * 9));
  init_param(p3w, rng, he_std(static_cast<std::int64_t>(out) * 9));
  init_param(pfw, rng, he_std(out));

  stw = Param("tcn.shared.w", {d1, taps, c});
  stb = Param("tcn.shared.b", {d1});
  init_param(stw, rng, he_std(static_cast<std::int64_t>(taps) * c));
}

std::vector<Param*> BackboneParams::active(const BackboneConfig& cfg) {
  std::vector<Param*> out = {&c1w, &c1b, &c2w, &c2b, &c3w, &c3b};
  const int n = cfg.n_stripes();
  if (cfg.ablation == Ablation::NoHpm) {
    for (Param* p : {&p1w, &p1b, &p2w, &p2b, &p3w, &p3b, &pfw, &pfb}) out.push_back(p);
  } else {
    for (int i = 0; i < n; ++i) {
      out.push_back(&hpm_w[static_cast<size_t>(i)]);
      out.push_back(&hpm_b[static_cast<size_t>(i)]);
    }
  }
  if (cfg.ablation == Ablation::NoMtb) {
    out.push_back(&stw);
    out.push_back(&stb);
  } else {
    for (int i = 0; i < n; ++i) {
      out.push_back(&tcn_w[static_cast<size_t>(i)]);
      out.push_back(&tcn_b[static_cast<size_t>(i)]);
    }
  }
  for (int i = 0; i < n; ++i) {
    out.push_back(&bin_w[static_cast<size_t>(i)]);
    out.push_back(&bin_b[static_cast<size_t>(i)]);
  }
  return out;
}

std::vector<const Param*> BackboneParams::active(const BackboneConfig& cfg) const {
  auto mut = const_cast<BackboneParams*>(this)->active(cfg);
  return {mut.begin(), mut.end()};
}

void BackboneParams::zero_grads(const BackboneConfig& cfg) {
  for (Param* p : active(cfg)) p->zero_grad();
}

Tensor cnn_encode(const Silhouette& frame, const BackboneConfig& cfg,
                  const BackboneParams& p, CnnTrace* tr) {
  if (frame.h != cfg.height || frame.w != cfg.width) {
    throw ShapeMismatch("encoder expects " + std::to_string(cfg.height) + "x" +
                        std::to_string(cfg.width) + " frames, got " +
                        std::to_string(frame.h) + "x" + std::to_string(frame.w));
  }
  Tensor x0({1, cfg.height, cfg.width});
  std::copy(frame.px.begin(), frame.px.end(), x0.data());

  Tensor a1 = conv2d_forward(x0, p.c1w.value, p.c1b.value, 2);
  lrelu_inplace(a1, cfg.lrelu_alpha);
  Tensor a2 = conv2d_forward(a1, p.c2w.value, p.c2b.value, 1);
  lrelu_inplace(a2, cfg.lrelu_alpha);
  std::vector<std::int32_t> idx;
  Tensor pooled = maxpool2x2_forward(a2, idx);
  Tensor fm = conv2d_forward(pooled, p.c3w.value, p.c3b.value, 1);
  lrelu_inplace(fm, cfg.lrelu_alpha);

  if (tr) {
    tr->x0 = std::move(x0);
    tr->a1 = std::move(a1);
    tr->a2 = std::move(a2);
    tr->pooled = std::move(pooled);
    tr->pool_idx = std::move(idx);
    tr->fm = fm;
  }
  return fm;
}

void cnn_backward(const CnnTrace& tr, const BackboneConfig& cfg, const Tensor& gfm,
                  BackboneParams& p) {
  Tensor g = gfm;
  lrelu_backward_inplace(tr.fm, g, cfg.lrelu_alpha);
  Tensor gpooled(tr.pooled.shape());
  conv2d_backward(tr.pooled, p.c3w.value, 1, g, &gpooled, p.c3w.grad, p.c3b.grad);
  Tensor ga2(tr.a2.shape());
  maxpool2x2_backward(tr.pool_idx, gpooled, ga2);
  lrelu_backward_inplace(tr.a2, ga2, cfg.lrelu_alpha);
  Tensor ga1(tr.a1.shape());
  conv2d_backward(tr.a1, p.c2w.value, 1, ga2, &ga1, p.c2w.grad, p.c2b.grad);
  lrelu_backward_inplace(tr.a1, ga1, cfg.lrelu_alpha);
  conv2d_backward(tr.x0, p.c1w.value, 2, ga1, nullptr, p.c1w.grad, p.c1b.grad);
}

namespace {

// Max+avg pooling of one strip per channel; winners recorded per (strip,ch).
void pool_strips(const Tensor& fm, const std::vector<Strip>& strips, Tensor& pooled,
                 std::vector<std::int32_t>& max_idx) {
  const int c2 = fm.dim(0), fw = fm.dim(2);
  const int n = static_cast<int>(strips.size());
  pooled = Tensor({n, c2});
  max_idx.assign(static_cast<size_t>(n) * c2, 0);
  for (int i = 0; i < n; ++i) {
    const Strip st = strips[static_cast<size_t>(i)];
    for (int ch = 0; ch < c2; ++ch) {
      const double* plane = fm.data() + static_cast<std::int64_t>(ch) * fm.dim(1) * fw;
      double best = plane[static_cast<std::int64_t>(st.y0) * fw];
      int besti = st.y0 * fw;
      double sum = 0.0;
      for (int y = st.y0; y < st.y0 + st.rows; ++y) {
        const double* row = plane + static_cast<std::int64_t>(y) * fw;
        for (int x = 0; x < fw; ++x) {
          sum += row[x];
          if (row[x] > best) {
            best = row[x];
            besti = y * fw + x;
          }
        }
      }
      pooled(i, ch) = best + sum / (st.rows * fw);
      max_idx[static_cast<size_t>(i) * c2 + ch] = besti;
    }
  }
}

}  // namespace

Tensor spatial_forward(const Tensor& fm, const BackboneConfig& cfg,
                       const BackboneParams& p, SpatialTrace* tr) {
  const int n = cfg.n_stripes();
  Tensor out({n, cfg.stripe_dim});

  if (cfg.ablation == Ablation::NoHpm) {
    Tensor pa1 = conv2d_forward(fm, p.p1w.value, p.p1b.value, 1);
    lrelu_inplace(pa1, cfg.lrelu_alpha);
    Tensor pa2 = conv2d_forward(pa1, p.p2w.value, p.p2b.value, 1);
    lrelu_inplace(pa2, cfg.lrelu_alpha);
    Tensor pa3 = conv2d_forward(pa2, p.p3w.value, p.p3b.value, 1);
    lrelu_inplace(pa3, cfg.lrelu_alpha);
    const int c2 = pa3.dim(0);
    const std::int64_t area = static_cast<std::int64_t>(pa3.dim(1)) * pa3.dim(2);
    Tensor gap({c2});
    for (int ch = 0; ch < c2; ++ch) {
      const double* plane = pa3.data() + static_cast<std::int64_t>(ch) * area;
      double s = 0.0;
      for (std::int64_t i = 0; i < area; ++i) s += plane[i];
      gap(ch) = s / static_cast<double>(area);
    }
    std::vector<double> row(static_cast<size_t>(cfg.stripe_dim));
    linear_forward(p.pfw.value, p.pfb.value, gap.data(), row.data());
    for (int i = 0; i < n; ++i) {
      std::copy(row.begin(), row.end(), out.row(i));
    }
    if (tr) {
      tr->pa1 = std::move(pa1);
      tr->pa2 = std::move(pa2);
      tr->pa3 = std::move(pa3);
      tr->gap = std::move(gap);
    }
    return out;
  }

  const std::vector<Strip> strips = strip_layout(fm.dim(1), cfg.scales);
  Tensor pooled;
  std::vector<std::int32_t> max_idx;
  pool_strips(fm, strips, pooled, max_idx);
  for (int i = 0; i < n; ++i) {
    linear_forward(p.hpm_w[static_cast<size_t>(i)].value, p.hpm_b[static_cast<size_t>(i)].value,
                   pooled.row(i), out.row(i));
  }
  if (tr) {
    tr->pooled = std::move(pooled);
    tr->max_idx = std::move(max_idx);
  }
  return out;
}

void spatial_backward(const SpatialTrace& tr, const BackboneConfig& cfg,
                      const Tensor& fm, const Tensor& grows, BackboneParams& p,
                      Tensor& gfm) {
  const int n = cfg.n_stripes();

  if (cfg.ablation == Ablation::NoHpm) {
    std::vector<double> gr(static_cast<size_t>(cfg.stripe_dim), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cfg.stripe_dim; ++j) gr[static_cast<size_t>(j)] += grows(i, j);
    }
    Tensor ggap({tr.gap.dim(0)});
    linear_backward(p.pfw.value, tr.gap.data(), gr.data(), p.pfw.grad, p.pfb.grad,
                    ggap.data());
    Tensor gpa3(tr.pa3.shape());
    const std::int64_t area = static_cast<std::int64_t>(tr.pa3.dim(1)) * tr.pa3.dim(2);
    for (int ch = 0; ch < tr.pa3.dim(0); ++ch) {
      double* plane = gpa3.data() + static_cast<std::int64_t>(ch) * area;
      const double g = ggap(ch) / static_cast<double>(area);
      for (std::int64_t i = 0; i < area; ++i) plane[i] = g;
    }
    lrelu_backward_inplace(tr.pa3, gpa3, cfg.lrelu_alpha);
    Tensor gpa2(tr.pa2.shape());
    conv2d_backward(tr.pa2, p.p3w.value, 1, gpa3, &gpa2, p.p3w.grad, p.p3b.grad);
    lrelu_backward_inplace(tr.pa2, gpa2, cfg.lrelu_alpha);
    Tensor gpa1(tr.pa1.shape());
    conv2d_backward(tr.pa1, p.p2w.value, 1, gpa2, &gpa1, p.p2w.grad, p.p2b.grad);
    lrelu_backward_inplace(tr.pa1, gpa1, cfg.lrelu_alpha);
    conv2d_backward(fm, p.p1w.value, 1, gpa1, &gfm, p.p1w.grad, p.p1b.grad);
    return;
  }

  const std::vector<Strip> strips = strip_layout(fm.dim(1), cfg.scales);
  const int c2 = fm.dim(0), fw = fm.dim(2);
  std::vector<double> gpool(static_cast<size_t>(c2));
  for (int i = 0; i < n; ++i) {
    std::fill(gpool.begin(), gpool.end(), 0.0);
    linear_backward(p.hpm_w[static_cast<size_t>(i)].value, tr.pooled.row(i), grows.row(i),
                    p.hpm_w[static_cast<size_t>(i)].grad, p.hpm_b[static_cast<size_t>(i)].grad,
                    gpool.data());
    const Strip st = strips[static_cast<size_t>(i)];
    const double inv_area = 1.0 / (st.rows * fw);
    for (int ch = 0; ch < c2; ++ch) {
      const double g = gpool[static_cast<size_t>(ch)];
      if (g == 0.0) continue;
      double* plane = gfm.data() + static_cast<std::int64_t>(ch) * fm.dim(1) * fw;
      plane[tr.max_idx[static_cast<size_t>(i) * c2 + ch]] += g;
      const double ga = g * inv_area;
      for (int y = st.y0; y < st.y0 + st.rows; ++y) {
        double* row = plane + static_cast<std::int64_t>(y) * fw;
        for (int x = 0; x < fw; ++x) row[x] += ga;
      }
    }
  }
}

Tensor fc_bins_apply(const Tensor& rows, const BackboneParams& p) {
  const int n = rows.dim(0);
  const int d1 = p.bin_w.empty() ? 0 : p.bin_w[0].value.dim(0);
  Tensor out({n, d1});
  for (int i = 0; i < n; ++i) {
    linear_forward(p.bin_w[static_cast<size_t>(i)].value, p.bin_b[static_cast<size_t>(i)].value,
                   rows.row(i), out.row(i));
  }
  return out;
}

void fc_bins_backward(const Tensor& rows, const Tensor& gout, BackboneParams& p,
                      Tensor& grows) {
  const int n = rows.dim(0);
  for (int i = 0; i < n; ++i) {
    linear_backward(p.bin_w[static_cast<size_t>(i)].value, rows.row(i), gout.row(i),
                    p.bin_w[static_cast<size_t>(i)].grad, p.bin_b[static_cast<size_t>(i)].grad,
                    grows.row(i));
  }
}

Tensor temporal_forward(const Tensor& stripes, const BackboneConfig& cfg,
                        const BackboneParams& p, MtbTrace* tr) {
  const int n = stripes.dim(0), T = stripes.dim(1), c = stripes.dim(2);
  if (T < 2 * cfg.radius + 1) {
    throw SequenceTooShort("temporal window needs " + std::to_string(2 * cfg.radius + 1) +
                           " frames, got " + std::to_string(T));
  }
  const int d1 = cfg.embed_dim;
  Tensor act({n, T, d1});
  for (int i = 0; i < n; ++i) {
    const Param& w = cfg.ablation == Ablation::NoMtb ? p.stw : p.tcn_w[static_cast<size_t>(i)];
    const Param& b = cfg.ablation == Ablation::NoMtb ? p.stb : p.tcn_b[static_cast<size_t>(i)];
    tconv_forward(stripes.row(i), T, c, w.value, b.value, act.row(i));
  }
  lrelu_inplace(act, cfg.lrelu_alpha);

  Tensor pooled({n, d1});
  std::vector<std::int32_t> tmax(static_cast<size_t>(n) * d1, 0);
  if (cfg.ablation == Ablation::NoMtb) {
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < d1; ++o) {
        double s = 0.0;
        for (int t = 0; t < T; ++t) s += act(i, t, o);
        pooled(i, o) = s / T;
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < d1; ++o) {
        double best = act(i, 0, o);
        int bt = 0;
        for (int t = 1; t < T; ++t) {
          if (act(i, t, o) > best) {
            best = act(i, t, o);
            bt = t;
          }
        }
        pooled(i, o) = best;
        tmax[static_cast<size_t>(i) * d1 + o] = bt;
      }
    }
  }

  Tensor out = fc_bins_apply(pooled, p);
  if (tr) {
    tr->stripes = stripes;
    tr->act = std::move(act);
    tr->tmax = std::move(tmax);
    tr->pooled = std::move(pooled);
  }
  return out;
}

Tensor temporal_backward(const MtbTrace& tr, const BackboneConfig& cfg,
                         const Tensor& gout, BackboneParams& p) {
  const int n = tr.stripes.dim(0), T = tr.stripes.dim(1), c = tr.stripes.dim(2);
  const int d1 = cfg.embed_dim;

  Tensor gpooled({n, d1});
  fc_bins_backward(tr.pooled, gout, p, gpooled);

  Tensor gact({n, T, d1});
  if (cfg.ablation == Ablation::NoMtb) {
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < d1; ++o) {
        const double g = gpooled(i, o) / T;
        for (int t = 0; t < T; ++t) gact(i, t, o) = g;
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < d1; ++o) {
        gact(i, tr.tmax[static_cast<size_t>(i) * d1 + o], o) = gpooled(i, o);
      }
    }
  }
  lrelu_backward_inplace(tr.act, gact, cfg.lrelu_alpha);

  Tensor gstripes({n, T, c});
  for (int i = 0; i < n; ++i) {
    Param& w = cfg.ablation == Ablation::NoMtb ? p.stw : p.tcn_w[static_cast<size_t>(i)];
    Param& b = cfg.ablation == Ablation::NoMtb ? p.stb : p.tcn_b[static_cast<size_t>(i)];
    tconv_backward(tr.stripes.row(i), T, c, w.value, gact.row(i), w.grad, b.grad,
                   gstripes.row(i));
  }
  return gstripes;
}

Tensor backbone_forward(const std::vector<Silhouette>& frames, const BackboneConfig& cfg,
                        const BackboneParams& p, BackboneTrace* tr) {
  if (frames.empty()) throw SequenceTooShort("backbone needs at least one frame");
  const int T = static_cast<int>(frames.size());
  const int n = cfg.n_stripes();
  Tensor stripes({n, T, cfg.stripe_dim});
  if (tr) {
    tr->cnn.assign(static_cast<size_t>(T), CnnTrace{});
    tr->spatial.assign(static_cast<size_t>(T), SpatialTrace{});
  }
  for (int t = 0; t < T; ++t) {
    Tensor fm = cnn_encode(frames[static_cast<size_t>(t)], cfg, p,
                           tr ? &tr->cnn[static_cast<size_t>(t)] : nullptr);
    Tensor rows = spatial_forward(fm, cfg, p,
                                  tr ? &tr->spatial[static_cast<size_t>(t)] : nullptr);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cfg.stripe_dim; ++j) stripes(i, t, j) = rows(i, j);
    }
  }
  return temporal_forward(stripes, cfg, p, tr ? &tr->mtb : nullptr);
}

void backbone_backward(const BackboneTrace& tr, const BackboneConfig& cfg,
                       const Tensor& gout, BackboneParams& p) {
  const int T = static_cast<int>(tr.cnn.size());
  const int n = cfg.n_stripes();
  Tensor gstripes = temporal_backward(tr.mtb, cfg, gout, p);
  Tensor grows({n, cfg.stripe_dim});
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cfg.stripe_dim; ++j) grows(i, j) = gstripes(i, t, j);
    }
    Tensor gfm(tr.cnn[static_cast<size_t>(t)].fm.shape());
    spatial_backward(tr.spatial[static_cast<size_t>(t)], cfg,
                     tr.cnn[static_cast<size_t>(t)].fm, grows, p, gfm);
    cnn_backward(tr.cnn[static_cast<size_t>(t)], cfg, gfm, p);
  }
}

}  // namespace ssgait

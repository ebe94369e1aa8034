#include "ssgait/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "ssgait/png_io.hpp"
#include "ssgait/rng.hpp"
#include "ssgait/silhouette.hpp"

namespace fs = std::filesystem;

namespace ssgait {

namespace {

// Latent body/gait parameters for one identity. Units are pixels on the
// 64x44 canvas unless noted.
struct BodyLatents {
  double head_r;        // head radius
  double torso_hw;      // torso half width
  double torso_frac;    // torso length as fraction of trunk span
  double hip_hw;        // hip half width (leg attachment offset)
  double leg_thick;     // leg capsule radius
  double arm_thick;     // arm capsule radius
  double arm_frac;      // arm length relative to leg length
  double stride_period; // frames per full gait cycle
  double stride_amp;    // leg swing amplitude, radians
  double arm_amp;       // arm swing amplitude, radians
  double bob_amp;       // vertical bob amplitude
};

BodyLatents draw_latents(Rng& rng) {
  BodyLatents b;
  b.head_r = rng.uniform(3.2, 5.4);
  b.torso_hw = rng.uniform(4.0, 7.5);
  b.torso_frac = rng.uniform(0.34, 0.46);
  b.hip_hw = rng.uniform(2.0, 4.5);
  b.leg_thick = rng.uniform(1.3, 2.8);
  b.arm_thick = rng.uniform(1.0, 2.0);
  b.arm_frac = rng.uniform(0.70, 0.92);
  b.stride_period = rng.uniform(8.0, 16.0);
  b.stride_amp = rng.uniform(0.30, 0.62);
  b.arm_amp = rng.uniform(0.25, 0.55);
  b.bob_amp = rng.uniform(0.2, 1.1);
  return b;
}

// Per-sequence capture jitter. Keyed by (identity, condition, sequence) but
// not view: one walk observed from several angles stays the same walk.
struct WalkJitter {
  double phase0;
  double speed;
  double lean;  // forward lean, shifts upper body horizontally
};

struct Seg {
  double x0, y0, x1, y1;
};

double seg_dist(double px, double py, const Seg& s) {
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = s.x0 + t * dx - px, ey = s.y0 + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

// Soft coverage in [0,1] from a signed inside-distance, ~1px edge band.
double soft(double d) { return std::clamp(d + 0.5, 0.0, 1.0); }

double ellipse_cov(double px, double py, double cx, double cy, double rx, double ry) {
  const double dx = (px - cx) / rx, dy = (py - cy) / ry;
  const double q = std::sqrt(dx * dx + dy * dy);
  return soft((1.0 - q) * std::min(rx, ry));
}

double capsule_cov(double px, double py, const Seg& s, double r) {
  return soft(r - seg_dist(px, py, s));
}

struct FigurePose {
  // Joint layout in canonical (un-sheared) canvas coordinates.
  double cx;
  double head_cx, head_cy, head_r;
  double torso_cx, torso_cy, torso_rx, torso_ry;
  Seg leg_l, leg_r, arm_l, arm_r;
  double leg_thick, arm_thick;
  bool bag = false;
  double bag_cx, bag_cy, bag_rx, bag_ry;
};

FigurePose pose_at(const BodyLatents& b, const WalkJitter& j, Condition cond, int t) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double phase = j.phase0 + kTwoPi * (t * j.speed) / b.stride_period;

  FigurePose f;
  f.cx = kAlignedWidth / 2.0;
  const double top = 3.0;
  const double bottom = kAlignedHeight - 3.0;
  const double bob = b.bob_amp * 0.5 * (1.0 - std::cos(2.0 * phase));

  const double head_d = 2.0 * b.head_r;
  const double trunk_span = bottom - top - head_d;  // neck..feet
  const double torso_len = b.torso_frac * trunk_span;
  const double neck_y = top + head_d + bob;
  const double hip_y = neck_y + torso_len;
  const double leg_len = bottom + bob - hip_y;

  const double lean = j.lean;
  f.head_r = b.head_r;
  f.head_cx = f.cx + lean * 1.6;
  f.head_cy = top + b.head_r + bob;

  double torso_hw = b.torso_hw;
  double torso_ry = torso_len / 2.0 + 1.5;
  if (cond == Condition::CL) {
    torso_hw *= 1.38;
    torso_ry *= 1.18;  // coat hangs below the hip
  }
  f.torso_cx = f.cx + lean * 0.8;
  f.torso_cy = (neck_y + hip_y) / 2.0;
  f.torso_rx = torso_hw;
  f.torso_ry = torso_ry;

  const double swing = b.stride_amp * std::sin(phase);
  auto leg = [&](double side, double ang) {
    Seg s;
    s.x0 = f.cx + side * b.hip_hw;
    s.y0 = hip_y;
    s.x1 = s.x0 + leg_len * std::sin(ang);
    s.y1 = hip_y + leg_len * std::cos(ang);
    return s;
  };
  f.leg_l = leg(-1.0, swing);
  f.leg_r = leg(+1.0, -swing);
  f.leg_thick = cond == Condition::CL ? b.leg_thick * 1.15 : b.leg_thick;

  const double arm_len = b.arm_frac * leg_len;
  const double arm_swing = b.arm_amp * std::sin(phase + std::numbers::pi);
  const double shoulder_y = neck_y + 1.5;
  auto arm = [&](double side, double ang) {
    Seg s;
    s.x0 = f.cx + lean * 0.8 + side * (b.torso_hw - 0.5);
    s.y0 = shoulder_y;
    s.x1 = s.x0 + arm_len * std::sin(ang);
    s.y1 = shoulder_y + arm_len * std::cos(ang);
    return s;
  };
  f.arm_l = arm(-1.0, arm_swing);
  f.arm_r = arm(+1.0, -arm_swing);
  f.arm_thick = b.arm_thick;

  if (cond == Condition::BG) {
    f.bag = true;
    f.bag_cx = f.cx + b.torso_hw + 2.8;
    f.bag_cy = hip_y - 3.0 + bob;
    f.bag_rx = 3.2;
    f.bag_ry = 4.6;
  }
  return f;
}

double cover(const FigurePose& f, double x, double y) {
  double v = 0.0;
  v = std::max(v, ellipse_cov(x, y, f.head_cx, f.head_cy, f.head_r, f.head_r));
  v = std::max(v, ellipse_cov(x, y, f.torso_cx, f.torso_cy, f.torso_rx, f.torso_ry));
  v = std::max(v, capsule_cov(x, y, f.leg_l, f.leg_thick));
  v = std::max(v, capsule_cov(x, y, f.leg_r, f.leg_thick));
  v = std::max(v, capsule_cov(x, y, f.arm_l, f.arm_thick));
  v = std::max(v, capsule_cov(x, y, f.arm_r, f.arm_thick));
  if (f.bag) v = std::max(v, ellipse_cov(x, y, f.bag_cx, f.bag_cy, f.bag_rx, f.bag_ry));
  return v;
}

Silhouette render_frame(const FigurePose& f, int view_deg) {
  // Camera angle maps to a horizontal affine map about the figure axis:
  // x' = cx + xscale*(x - cx) + shear*(y - cy). Rendering inverts it.
  const double rad = view_deg * std::numbers::pi / 180.0;
  const double shear = 0.32 * std::sin(rad);
  const double xscale = 1.0 - 0.22 * std::sin(rad);
  const double cx = kAlignedWidth / 2.0, cy = kAlignedHeight / 2.0;

  Silhouette s;
  s.h = kAlignedHeight;
  s.w = kAlignedWidth;
  s.px.assign(static_cast<size_t>(s.h) * s.w, 0.0);
  for (int y = 0; y < s.h; ++y) {
    const double yc = y + 0.5;
    for (int x = 0; x < s.w; ++x) {
      const double xc = x + 0.5;
      const double xs = cx + (xc - cx - shear * (yc - cy)) / xscale;
      s.px[static_cast<size_t>(y) * s.w + x] = cover(f, xs, yc);
    }
  }
  return s;
}

void check_config(const SynthConfig& cfg) {
  if (cfg.n_identities < 1 || cfg.sequences_per_identity < 1 ||
      cfg.frames_per_sequence < 1 || cfg.views.empty() || cfg.conditions.empty()) {
    throw std::invalid_argument("synthetic dataset: all counts must be >= 1");
  }
}

}  // namespace

DatasetIndex generate_synthetic_dataset(const SynthConfig& cfg) {
  check_config(cfg);
  Rng root(cfg.seed);
  Rng id_stream = root.stream("identity");
  Rng walk_stream = root.stream("walk");

  DatasetIndex index;
  for (int id = 1; id <= cfg.n_identities; ++id) {
    Rng id_rng = id_stream.at(static_cast<std::uint64_t>(id));
    const BodyLatents body = draw_latents(id_rng);
    for (Condition cond : cfg.conditions) {
      for (int seq = 1; seq <= cfg.sequences_per_identity; ++seq) {
        Rng w = walk_stream.at(static_cast<std::uint64_t>(id),
                               static_cast<std::uint64_t>(cond),
                               static_cast<std::uint64_t>(seq));
        WalkJitter jit;
        jit.phase0 = w.uniform(0.0, 2.0 * std::numbers::pi);
        jit.speed = w.uniform(0.9, 1.1);
        jit.lean = w.uniform(-0.6, 0.6);
        for (int view : cfg.views) {
          GaitSequence gs;
          gs.identity = id;
          gs.view_deg = view;
          gs.condition = cond;
          gs.seq_index = seq;
          auto frames = std::make_shared<std::vector<Silhouette>>();
          frames->reserve(static_cast<size_t>(cfg.frames_per_sequence));
          for (int t = 0; t < cfg.frames_per_sequence; ++t) {
            frames->push_back(render_frame(pose_at(body, jit, cond, t), view));
          }
          gs.frames_inline = std::move(frames);
          index.sequences.push_back(std::move(gs));
        }
      }
    }
  }
  return index;
}

void materialize_synthetic_dataset(const SynthConfig& cfg, const std::string& root) {
  DatasetIndex index = generate_synthetic_dataset(cfg);
  char buf[64];
  for (const GaitSequence& gs : index.sequences) {
    std::snprintf(buf, sizeof(buf), "%03d/%s-%02d/%03d", gs.identity,
                  condition_name(gs.condition), gs.seq_index, gs.view_deg);
    const fs::path dir = fs::path(root) / buf;
    fs::create_directories(dir);
    const auto& frames = *gs.frames_inline;
    for (size_t t = 0; t < frames.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%04zu.png", t);
      write_png_gray((dir / buf).string(), frames[t]);
    }
  }
}

}  // namespace ssgait

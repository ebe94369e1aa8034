#include "ssgait/silhouette.hpp"

#include <algorithm>
#include <cmath>

#include "ssgait/errors.hpp"

namespace ssgait {

bool Silhouette::empty_mask() const {
  for (double v : px) {
    if (v > 0.0) return false;
  }
  return true;
}

namespace {

// Nearest-neighbor: destination pixel center mapped back to the source grid.
inline int src_index(int dst, int dst_len, int src_len) {
  int s = static_cast<int>(std::floor((dst + 0.5) * static_cast<double>(src_len) / dst_len));
  return std::clamp(s, 0, src_len - 1);
}

// Half-to-even rounding keeps re-alignment of an already centered frame from
// oscillating by one pixel when the center of mass sits exactly between columns.
inline int round_half_even(double x) {
  const double f = std::floor(x);
  const double frac = x - f;
  if (frac > 0.5) return static_cast<int>(f) + 1;
  if (frac < 0.5) return static_cast<int>(f);
  return (std::fmod(f, 2.0) == 0.0) ? static_cast<int>(f) : static_cast<int>(f) + 1;
}

}  // namespace

Silhouette align_silhouette(const Silhouette& raw) {
  if (raw.empty_mask()) throw EmptySilhouette();

  int top = 0, bottom = raw.h - 1;
  auto row_has_pixel = [&](int y) {
    for (int x = 0; x < raw.w; ++x) {
      if (raw.at(y, x) > 0.0) return true;
    }
    return false;
  };
  while (!row_has_pixel(top)) ++top;
  while (!row_has_pixel(bottom)) --bottom;
  const int band_h = bottom - top + 1;

  // Scale the band to height 64 with the same factor on both axes.
  const double scale = static_cast<double>(kAlignedHeight) / band_h;
  const int scaled_w = std::max(1, static_cast<int>(std::lround(raw.w * scale)));

  Silhouette scaled(kAlignedHeight, scaled_w);
  for (int y = 0; y < kAlignedHeight; ++y) {
    const int sy = top + src_index(y, kAlignedHeight, band_h);
    for (int x = 0; x < scaled_w; ++x) {
      const int sx = src_index(x, scaled_w, raw.w);
      scaled.at(y, x) = raw.at(sy, sx);
    }
  }

  // Horizontal center of mass over the top half of the scaled band.
  double mass = 0.0, moment = 0.0;
  for (int y = 0; y < kAlignedHeight / 2; ++y) {
    for (int x = 0; x < scaled_w; ++x) {
      mass += scaled.at(y, x);
      moment += scaled.at(y, x) * x;
    }
  }
  // Top half of a nonempty band can still be empty; fall back to the whole frame.
  if (mass <= 0.0) {
    for (int y = 0; y < kAlignedHeight; ++y) {
      for (int x = 0; x < scaled_w; ++x) {
        mass += scaled.at(y, x);
        moment += scaled.at(y, x) * x;
      }
    }
  }
  const double com = moment / mass;
  const int left = round_half_even(com - (kAlignedWidth - 1) / 2.0);

  Silhouette out(kAlignedHeight, kAlignedWidth);
  for (int y = 0; y < kAlignedHeight; ++y) {
    for (int x = 0; x < kAlignedWidth; ++x) {
      const int sx = left + x;
      out.at(y, x) = (sx >= 0 && sx < scaled_w) ? scaled.at(y, sx) : 0.0;
    }
  }
  return out;
}

}  // namespace ssgait

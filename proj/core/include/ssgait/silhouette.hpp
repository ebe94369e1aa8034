#pragma once

#include <vector>

namespace ssgait {

// One silhouette frame: grayscale intensities in [0, 1], row-major.
// Raw frames may be any size; aligned frames are exactly 64x44.
struct Silhouette {
  int h = 0;
  int w = 0;
  std::vector<double> px;

  Silhouette() = default;
  Silhouette(int height, int width) : h(height), w(width), px(static_cast<size_t>(height) * width, 0.0) {}

  double& at(int y, int x) { return px[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return px[static_cast<size_t>(y) * w + x]; }

  bool empty_mask() const;
};

inline constexpr int kAlignedHeight = 64;
inline constexpr int kAlignedWidth = 44;

// Normalizes a raw silhouette to 64x44: crop to the nonzero row band, scale
// that band to height 64 (aspect preserved, nearest-neighbor), then place a
// 44-wide window centered on the horizontal center of mass of the top half.
// Throws EmptySilhouette when no pixel is nonzero.
Silhouette align_silhouette(const Silhouette& raw);

}  // namespace ssgait

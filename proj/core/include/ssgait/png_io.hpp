#pragma once

#include <string>

#include "ssgait/silhouette.hpp"

namespace ssgait {

// Reads any 8/16-bit gray, palette, or RGB(A) PNG as 8-bit grayscale and
// scales to [0, 1] by dividing by 255.
Silhouette read_png_gray(const std::string& path);

// Writes an 8-bit grayscale PNG. Values are clamped to [0, 1] and scaled by
// 255. Output bytes are deterministic for identical input.
void write_png_gray(const std::string& path, const Silhouette& img);

}  // namespace ssgait

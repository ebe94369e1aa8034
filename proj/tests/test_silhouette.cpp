#include <cmath>

#include "doctest.h"
#include "ssgait/errors.hpp"
#include "ssgait/silhouette.hpp"

using namespace ssgait;

TEST_CASE("uniform content aligns to uniform content") {
  Silhouette raw(128, 88);
  for (auto& v : raw.px) v = 1.0;
  Silhouette out = align_silhouette(raw);
  REQUIRE(out.h == 64);
  REQUIRE(out.w == 44);
  for (double v : out.px) CHECK(v == 1.0);
}

TEST_CASE("a full-height vertical bar stays a centered full-height bar") {
  Silhouette raw(100, 100);
  for (int y = 0; y < 100; ++y) {
    for (int x = 46; x < 54; ++x) raw.at(y, x) = 1.0;  // width 8, centered
  }
  Silhouette out = align_silhouette(raw);
  REQUIRE(out.h == 64);
  REQUIRE(out.w == 44);

  int min_x = 44, max_x = -1;
  for (int y = 0; y < 64; ++y) {
    bool row_hit = false;
    for (int x = 0; x < 44; ++x) {
      if (out.at(y, x) > 0) {
        row_hit = true;
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
      }
    }
    CHECK(row_hit);  // full height preserved
  }
  const int width = max_x - min_x + 1;
  // 8 source columns scaled by 64/100 land on ~5 output columns.
  CHECK(width >= 4);
  CHECK(width <= 6);
  // Centered: bar midpoint near the 44-wide frame center.
  const double mid = 0.5 * (min_x + max_x);
  CHECK(std::abs(mid - 21.5) <= 1.5);
}

TEST_CASE("vertical extent is normalized regardless of input placement") {
  // Subject occupying rows 20..39 of an 80-row frame fills the full 64 rows.
  Silhouette raw(80, 50);
  for (int y = 20; y < 40; ++y) {
    for (int x = 20; x < 30; ++x) raw.at(y, x) = 1.0;
  }
  Silhouette out = align_silhouette(raw);
  bool top = false, bottom = false;
  for (int x = 0; x < 44; ++x) {
    top |= out.at(0, x) > 0;
    bottom |= out.at(63, x) > 0;
  }
  CHECK(top);
  CHECK(bottom);
}

TEST_CASE("aligning twice changes nothing") {
  Silhouette raw(90, 70);
  for (int y = 10; y < 80; ++y) {
    for (int x = 25; x < 45; ++x) raw.at(y, x) = ((x + y) % 3) ? 1.0 : 0.6;
  }
  Silhouette once = align_silhouette(raw);
  Silhouette twice = align_silhouette(once);
  REQUIRE(once.h == twice.h);
  REQUIRE(once.w == twice.w);
  for (size_t i = 0; i < once.px.size(); ++i) {
    CHECK(std::abs(once.px[i] - twice.px[i]) <= 1e-6);
  }
}

TEST_CASE("an empty mask is rejected") {
  Silhouette raw(32, 32);
  CHECK_THROWS_AS(align_silhouette(raw), EmptySilhouette);
  CHECK(raw.empty_mask());
}

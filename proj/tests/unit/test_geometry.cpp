#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cdcnn/errors.hpp"
#include "cdcnn/geometry.hpp"
#include "test_util.hpp"

using namespace cdcnn;

TEST_CASE("iou examples") {
  const BBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BBox{20, 20, 5, 5}) == 0.0);
  CHECK(iou(a, BBox{5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("iou rejects degenerate boxes") {
  CHECK_THROWS_AS(iou(BBox{0, 0, 0, 10}, BBox{0, 0, 10, 10}), InvalidInput);
  CHECK_THROWS_AS(iou(BBox{0, 0, 10, 10}, BBox{0, 0, 10, -1}), InvalidInput);
  CHECK_THROWS_AS(iou(BBox{0, 0, NAN, 10}, BBox{0, 0, 10, 10}), InvalidInput);
}

TEST_CASE("iou is symmetric and bounded over random boxes") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pos(-20, 60);
  std::uniform_real_distribution<double> size(0.5, 40);
  for (int i = 0; i < 10000; ++i) {
    const BBox a{pos(rng), pos(rng), size(rng), size(rng)};
    const BBox b{pos(rng), pos(rng), size(rng), size(rng)};
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(iou(a, a) == 1.0);
  }
}

TEST_CASE("center distance") {
  CHECK(center_distance(BBox{3, 3, 4, 4}, BBox{3, 3, 4, 4}) == 0.0);
  CHECK(center_distance(BBox{0, 0, 2, 2}, BBox{3, 4, 2, 2}) == 5.0);
  CHECK(center_distance(BBox{0, 0, 2, 2}, BBox{10, 0, 2, 2}) == 10.0);
  CHECK_THROWS_AS(center_distance(BBox{0, 0, 0, 2}, BBox{10, 0, 2, 2}), InvalidInput);
}

TEST_CASE("average boxes") {
  const BBox a{0, 0, 10, 10};
  CHECK(average_boxes(std::vector<BBox>{a}) == a);
  CHECK(average_boxes(std::vector<BBox>{a, BBox{2, 2, 12, 12}}) == BBox{1, 1, 11, 11});
  CHECK_THROWS_AS(average_boxes(std::vector<BBox>{}), InvalidInput);
}

TEST_CASE("average of identical boxes is bit-exact") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.1, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const BBox b{d(rng), d(rng), d(rng), d(rng)};
    for (std::size_t k : {2u, 5u, 7u}) {
      const std::vector<BBox> copies(k, b);
      CHECK(average_boxes(copies) == b);
    }
  }
}

TEST_CASE("clip box") {
  const auto inside = clip_box(BBox{2, 3, 4, 5}, 10, 10);
  REQUIRE(inside);
  CHECK(*inside == BBox{2, 3, 4, 5});
  const auto partial = clip_box(BBox{-2, 8, 4, 5}, 10, 10);
  REQUIRE(partial);
  CHECK(*partial == BBox{0, 8, 2, 2});
  CHECK_FALSE(clip_box(BBox{12, 0, 3, 3}, 10, 10));
  CHECK_FALSE(clip_box(BBox{10, 0, 3, 3}, 10, 10));
}

TEST_CASE("uniform frame crops to an all-zero patch") {
  Frame f(20, 20, 1);
  std::fill(f.pixels.begin(), f.pixels.end(), 128);
  const Patch p = crop_resize_normalize(f, BBox{3.3, 4.1, 7.7, 9.2}, 8);
  REQUIRE(p.pixels.size() == 64);
  for (double v : p.pixels) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("box matching an SxS pixel region reproduces it without interpolation") {
  const Frame f = testutil::noise_frame(16, 16, 3);
  const int side = 6;
  const Patch p = crop_resize_normalize(f, BBox{5, 2, side, side}, side);
  double mean = 0.0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) mean += f.at(5 + x, 2 + y) / 255.0;
  mean /= side * side;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) CHECK(p.pixels[y * side + x] == doctest::Approx(f.at(5 + x, 2 + y) / 255.0 - mean).epsilon(1e-14));
}

namespace {

// Tent-kernel formulation of bilinear sampling at continuous source position
// (fx, fy), clamped to the pixel index range.
double tent_sample(const Frame& f, double fx, double fy) {
  fx = std::clamp(fx, 0.0, f.width - 1.0);
  fy = std::clamp(fy, 0.0, f.height - 1.0);
  double v = 0.0;
  for (int j = 0; j < f.height; ++j) {
    for (int i = 0; i < f.width; ++i) {
      const double wx = std::max(0.0, 1.0 - std::abs(fx - i));
      const double wy = std::max(0.0, 1.0 - std::abs(fy - j));
      v += wx * wy * f.at(i, j);
    }
  }
  return v;
}

}  // namespace

TEST_CASE("2x2 checkerboard upscaled to 4 matches a reference resampler") {
  Frame f(2, 2, 1);
  f.at(0, 0) = 255;
  f.at(1, 1) = 255;
  const int side = 4;
  const Patch p = crop_resize_normalize(f, BBox{0, 0, 2, 2}, side);
  std::vector<double> ref;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      // Output pixel centre in normalized coordinates, mapped back to source pixels.
      const double u = (c + 0.5) / side;
      const double v = (r + 0.5) / side;
      ref.push_back(tent_sample(f, u * 2.0 - 0.5, v * 2.0 - 0.5) / 255.0);
    }
  }
  double mean = 0.0;
  for (double x : ref) mean += x;
  mean /= ref.size();
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(p.pixels[i] == doctest::Approx(ref[i] - mean).epsilon(1e-14));
  // Corners sit on the clamped source pixels; the checkerboard is centrally symmetric.
  CHECK(p.pixels[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.pixels[3] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("patch mean is zero and shape is exact, including RGB") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-10, 40);
  std::uniform_real_distribution<double> size(2, 30);
  Frame rgb(32, 24, 3);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<std::uint8_t>((i * 37) % 256);
  for (int i = 0; i < 200; ++i) {
    const BBox b{pos(rng), pos(rng), size(rng), size(rng)};
    if (!clip_box(b, rgb.width, rgb.height)) continue;
    const Patch p = crop_resize_normalize(rgb, b, 5);
    REQUIRE(p.pixels.size() == 5u * 5u * 3u);
    double mean = 0.0;
    for (double v : p.pixels) {
      mean += v;
      CHECK(std::abs(v) <= 1.0);
    }
    CHECK(std::abs(mean / p.pixels.size()) < 1e-9);
  }
}

TEST_CASE("crop outside the frame is out of view") {
  const Frame f = testutil::noise_frame(10, 10, 1);
  CHECK_THROWS_AS(crop_resize_normalize(f, BBox{20, 20, 5, 5}, 4), OutOfView);
  const Patch edge = crop_resize_normalize(f, BBox{-3, -3, 6, 6}, 4);
  CHECK(edge.source_box == BBox{0, 0, 3, 3});
}

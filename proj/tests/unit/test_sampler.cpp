#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "cdcnn/errors.hpp"
#include "cdcnn/sampler.hpp"

using namespace cdcnn;

namespace {

const FrameSize kFrame{200, 200};

int max_norm_offset(const BBox& b, const BBox& gt) {
  const double dx = b.x - gt.x;
  const double dy = b.y - gt.y;
  return static_cast<int>(std::max(std::abs(dx), std::abs(dy)));
}

}  // namespace

TEST_CASE("config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(validate(c));
  c.lo = 0.0;
  CHECK_THROWS_AS(validate(c), InvalidConfig);
  c = SamplerConfig{};
  c.hi = 0.1;
  CHECK_THROWS_AS(validate(c), InvalidConfig);
  c = SamplerConfig{};
  c.shift_max = 3;
  CHECK_THROWS_AS(validate(c), InvalidConfig);
  c = SamplerConfig{};
  c.update_neg_iou = 0.95;
  CHECK_THROWS_AS(validate(c), InvalidConfig);
  CHECK_THROWS_AS(Sampler(c, 1), InvalidConfig);
}

TEST_CASE("positive offsets enumerate the max-norm shell") {
  CHECK(positive_offsets(1).size() == 8);
  CHECK(positive_offsets(2).size() == 24);
  for (auto [dx, dy] : positive_offsets(2)) {
    const int n = std::max(std::abs(dx), std::abs(dy));
    CHECK(n >= 1);
    CHECK(n <= 2);
  }
}

TEST_CASE("positives with shift_max=1 are unit translations") {
  SamplerConfig c;
  c.shift_max = 1;
  c.m_p = 500;
  Sampler s(c, 5);
  const BBox gt{50, 60, 20, 30};
  for (const BBox& b : s.sample_positives(gt, kFrame)) {
    CHECK(b != gt);
    CHECK(max_norm_offset(b, gt) == 1);
    CHECK(b.w == gt.w);
    CHECK(b.h == gt.h);
  }
}

TEST_CASE("positive translation example") {
  // The (2, 0) offset applied to (10,10,5,5).
  const BBox gt{10, 10, 5, 5};
  SamplerConfig c;
  c.m_p = 2000;
  Sampler s(c, 1);
  bool seen = false;
  for (const BBox& b : s.sample_positives(gt, kFrame)) seen = seen || b == BBox{12, 10, 5, 5};
  CHECK(seen);
}

TEST_CASE("positives never fall below the worst-case 2 px shift IoU") {
  for (double size : {6.0, 12.0, 24.0, 40.0}) {
    const BBox gt{80, 80, size, size * 0.75};
    double min_iou = 1.0;
    for (int dx = -2; dx <= 2; ++dx)
      for (int dy = -2; dy <= 2; ++dy)
        if (dx != 0 || dy != 0) min_iou = std::min(min_iou, iou(gt, BBox{gt.x + dx, gt.y + dy, gt.w, gt.h}));
    SamplerConfig c;
    c.m_p = 1000;
    Sampler s(c, 9);
    for (const BBox& b : s.sample_positives(gt, kFrame)) CHECK(iou(b, gt) >= min_iou);
  }
}

TEST_CASE("negatives satisfy the IoU window and exclude the ground truth") {
  SamplerConfig c;
  c.m_n = 2000;
  Sampler s(c, 3);
  const BBox gt{70, 40, 24, 18};
  for (const BBox& b : s.sample_negatives(gt, kFrame)) {
    const double o = iou(b, gt);
    CHECK(o >= 0.2);
    CHECK(o <= 0.6);
    CHECK(b != gt);
  }
}

TEST_CASE("negative acceptance rate matches a brute-force simulation") {
  // Independent simulation of the proposal distribution: 1e5 raw proposals.
  const BBox gt{90, 90, 20, 20};
  const SamplerConfig c;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double spread = c.neg_sigma_xy * 20.0;
  int accepted = 0;
  const int raw = 100000;
  for (int i = 0; i < raw; ++i) {
    const double s = std::exp(c.neg_sigma_scale * unit(rng));
    const double cx = 100.0 + spread * unit(rng);
    const double cy = 100.0 + spread * unit(rng);
    const double w = 20.0 * s;
    const double ix = std::max(0.0, std::min(cx + w / 2, 110.0) - std::max(cx - w / 2, 90.0));
    const double iy = std::max(0.0, std::min(cy + w / 2, 110.0) - std::max(cy - w / 2, 90.0));
    const double inter = ix * iy;
    const double o = inter / (400.0 + w * w - inter);
    accepted += (o >= c.lo && o <= c.hi);
  }
  const double expected = static_cast<double>(accepted) / raw;

  SamplerConfig big = c;
  big.m_n = 20000;
  Sampler s(big, 77);
  s.sample_negatives(gt, kFrame);
  const double measured =
      static_cast<double>(s.negative_stats().accepted) / static_cast<double>(s.negative_stats().proposed);
  CHECK(measured == doctest::Approx(expected).epsilon(0.2));
  MESSAGE("acceptance rate expected " << expected << " measured " << measured);
}

TEST_CASE("exhaustion names the frame") {
  SamplerConfig c;
  c.lo = 0.59;
  c.hi = 0.6;
  c.update_neg_iou = 0.6;
  c.max_rejections = 5;
  Sampler s(c, 1);
  try {
    s.sample_negatives(BBox{50, 50, 20, 20}, kFrame, 17);
    FAIL("expected exhaustion");
  } catch (const SamplerExhausted& e) {
    CHECK(std::string(e.what()).find("frame 17") != std::string::npos);
  }
}

TEST_CASE("zero-noise candidates equal the previous box") {
  SamplerConfig c;
  c.sigma_xy = 0.0;
  c.sigma_scale = 0.0;
  Sampler s(c, 1);
  const BBox prev{30, 40, 20, 16};
  for (const BBox& b : s.sample_candidates(prev, 100, kFrame)) CHECK(b == prev);
}

TEST_CASE("candidates are deterministic under a fixed seed") {
  Sampler a(SamplerConfig{}, 99);
  Sampler b(SamplerConfig{}, 99);
  const BBox prev{60, 60, 20, 20};
  CHECK(a.sample_candidates(prev, 800, kFrame) == b.sample_candidates(prev, 800, kFrame));
  Sampler c(SamplerConfig{}, 100);
  CHECK(c.sample_candidates(prev, 800, kFrame) != Sampler(SamplerConfig{}, 99).sample_candidates(prev, 800, kFrame));
}

TEST_CASE("candidate centre spread matches sigma_xy") {
  const SamplerConfig c;
  Sampler s(c, 4);
  const BBox prev{1000, 1000, 20, 12};
  const FrameSize huge{4000, 4000};
  const auto boxes = s.sample_candidates(prev, 10000, huge);
  double sx = 0.0, sxx = 0.0, sy = 0.0, syy = 0.0;
  for (const BBox& b : boxes) {
    const double dx = b.cx() - prev.cx();
    const double dy = b.cy() - prev.cy();
    sx += dx;
    sxx += dx * dx;
    sy += dy;
    syy += dy * dy;
  }
  const double n = static_cast<double>(boxes.size());
  const double target = c.sigma_xy * 20.0;
  CHECK(std::sqrt(sxx / n - (sx / n) * (sx / n)) == doctest::Approx(target).epsilon(0.05));
  CHECK(std::sqrt(syy / n - (sy / n) * (sy / n)) == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("candidates are clipped to the frame") {
  Sampler s(SamplerConfig{}, 8);
  const FrameSize f{64, 48};
  for (const BBox& b : s.sample_candidates(BBox{50, 35, 20, 20}, 500, f)) {
    CHECK(b.x >= 0.0);
    CHECK(b.y >= 0.0);
    CHECK(b.right() <= 64.0);
    CHECK(b.bottom() <= 48.0);
  }
}

TEST_CASE("update batch labels and window") {
  Sampler s(SamplerConfig{}, 12);
  const BBox pred{60, 70, 24, 20};
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledBoxes lb = s.sample_update_batch(pred, kFrame);
    CHECK(lb.positives.size() == 16);
    CHECK(lb.negatives.size() == 16);
    for (const BBox& b : lb.positives) CHECK(iou(b, pred) >= 0.9);
    for (const BBox& b : lb.negatives) {
      CHECK(iou(b, pred) <= 0.6);
      CHECK(iou(b, pred) >= 0.2);
    }
    for (const auto* list : {&lb.positives, &lb.negatives}) {
      for (const BBox& b : *list) {
        CHECK(std::abs(b.cx() - pred.cx()) <= pred.w + 1e-9);
        CHECK(std::abs(b.cy() - pred.cy()) <= pred.h + 1e-9);
      }
    }
  }
}

TEST_CASE("update batch at the frame edge still succeeds") {
  Sampler s(SamplerConfig{}, 13);
  const FrameSize f{128, 128};
  const std::vector<BBox> edges{{0, 0, 24, 24}, {104, 104, 24, 24}, {0, 60, 20, 30}, {110, 0, 18, 18}};
  for (int trial = 0; trial < 100; ++trial) {
    const BBox& pred = edges[trial % edges.size()];
    const LabeledBoxes lb = s.sample_update_batch(pred, f);
    CHECK(lb.positives.size() == 16);
    CHECK(lb.negatives.size() == 16);
  }
}

TEST_CASE("triplet pairing") {
  Sampler s(SamplerConfig{}, 1);
  const auto one = s.build_triplets(1, 1, 1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].pos_t == 0);
  CHECK(one[0].pos_t1 == 0);
  CHECK(one[0].neg_t == 0);
  CHECK(s.build_triplets(3, 3, 3, 0).empty());
  CHECK_THROWS_AS(s.build_triplets(0, 3, 3, 2), InvalidInput);
  Sampler a(SamplerConfig{}, 5);
  Sampler b(SamplerConfig{}, 5);
  const auto ta = a.build_triplets(7, 8, 9, 50);
  const auto tb = b.build_triplets(7, 8, 9, 50);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    CHECK(ta[i].pos_t == tb[i].pos_t);
    CHECK(ta[i].pos_t1 == tb[i].pos_t1);
    CHECK(ta[i].neg_t == tb[i].neg_t);
    CHECK(ta[i].pos_t < 7);
    CHECK(ta[i].pos_t1 < 8);
    CHECK(ta[i].neg_t < 9);
  }
}

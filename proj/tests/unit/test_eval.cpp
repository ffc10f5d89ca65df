#include <doctest.h>

#include <random>

#include "cdcnn/errors.hpp"
#include "cdcnn/eval.hpp"
#include "cdcnn/textio.hpp"
#include "test_util.hpp"

using namespace cdcnn;

namespace {

std::vector<BBox> random_boxes(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(0, 60), size(4, 30);
  std::vector<BBox> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(BBox{pos(rng), pos(rng), size(rng), size(rng)});
  return out;
}

}  // namespace

TEST_CASE("threshold grids") {
  const auto p = precision_thresholds();
  REQUIRE(p.size() == 51);
  CHECK(p.front() == 0.0);
  CHECK(p.back() == 50.0);
  const auto s = success_thresholds();
  REQUIRE(s.size() == 21);
  CHECK(s[1] == 0.05);
  CHECK(s.back() == 1.0);
}

TEST_CASE("perfect predictions") {
  std::mt19937_64 rng(1);
  const auto gt = random_boxes(rng, 30);
  const Curve p = precision_curve(gt, gt);
  for (double v : p.values) CHECK(v == 1.0);
  const Curve s = success_curve(gt, gt);
  for (std::size_t i = 0; i + 1 < s.values.size(); ++i) CHECK(s.values[i] == 1.0);
  // Strict inequality: IoU 1 is not > 1.
  CHECK(s.values.back() == 0.0);
  CHECK(auc(s) == doctest::Approx(20.0 / 21.0).epsilon(1e-15));
}

TEST_CASE("precision step function at 25 px") {
  std::vector<BBox> gt, res;
  for (int i = 0; i < 10; ++i) {
    gt.push_back(BBox{10.0 + i, 10, 8, 8});
    res.push_back(BBox{10.0 + i + 15, 10 + 20, 8, 8});
  }
  const Curve p = precision_curve(res, gt);
  for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(p.values[i] == (p.thresholds[i] >= 25.0 ? 1.0 : 0.0));
}

TEST_CASE("zero overlap gives an all-zero success curve") {
  const std::vector<BBox> gt{{0, 0, 10, 10}, {5, 5, 10, 10}};
  const std::vector<BBox> res{{50, 50, 10, 10}, {5, 15, 10, 10}};
  for (double v : success_curve(res, gt).values) CHECK(v == 0.0);
}

TEST_CASE("curves match a brute-force counting oracle and are monotone") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gt = random_boxes(rng, 40);
    auto res = gt;
    std::normal_distribution<double> jitter(0, 6);
    for (auto& b : res) {
      b.x += jitter(rng);
      b.y += jitter(rng);
    }
    const Curve p = precision_curve(res, gt);
    const Curve s = success_curve(res, gt);
    for (std::size_t t = 0; t < p.thresholds.size(); ++t) {
      int hits = 0;
      for (std::size_t i = 0; i < gt.size(); ++i) {
        const double dx = (res[i].x + res[i].w / 2) - (gt[i].x + gt[i].w / 2);
        const double dy = (res[i].y + res[i].h / 2) - (gt[i].y + gt[i].h / 2);
        hits += std::sqrt(dx * dx + dy * dy) <= p.thresholds[t];
      }
      CHECK(p.values[t] == static_cast<double>(hits) / gt.size());
      if (t) CHECK(p.values[t] >= p.values[t - 1]);
    }
    for (std::size_t t = 0; t < s.thresholds.size(); ++t) {
      int hits = 0;
      for (std::size_t i = 0; i < gt.size(); ++i) {
        const double iw = std::max(0.0, std::min(res[i].right(), gt[i].right()) - std::max(res[i].x, gt[i].x));
        const double ih = std::max(0.0, std::min(res[i].bottom(), gt[i].bottom()) - std::max(res[i].y, gt[i].y));
        const double inter = iw * ih;
        hits += inter / (res[i].area() + gt[i].area() - inter) > s.thresholds[t];
      }
      CHECK(s.values[t] == static_cast<double>(hits) / gt.size());
      if (t) CHECK(s.values[t] <= s.values[t - 1]);
    }
    CHECK(value_at(p, 20.0) == p.values[20]);
  }
}

TEST_CASE("auc conventions") {
  Curve c{"c", success_thresholds(), std::vector<double>(21, 1.0)};
  CHECK(auc(c) == 1.0);
  c.values.assign(21, 0.5);
  CHECK(auc(c) == 0.5);
  for (int i = 0; i <= 20; ++i) c.values[i] = 1.0 - i / 20.0;
  CHECK(auc(c) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(auc(Curve{}), InvalidInput);
  CHECK_THROWS_AS(value_at(c, 0.33), InvalidInput);
}

TEST_CASE("AUC is invariant under duplicated results") {
  std::mt19937_64 rng(3);
  const auto gt = random_boxes(rng, 15);
  auto res = random_boxes(rng, 15);
  std::vector<BBox> gt2 = gt, res2 = res;
  gt2.insert(gt2.end(), gt.begin(), gt.end());
  res2.insert(res2.end(), res.begin(), res.end());
  CHECK(auc(success_curve(res, gt)) == auc(success_curve(res2, gt2)));
}

TEST_CASE("length mismatch is rejected") {
  const std::vector<BBox> a{{0, 0, 1, 1}};
  const std::vector<BBox> b{{0, 0, 1, 1}, {0, 0, 1, 1}};
  CHECK_THROWS_AS(precision_curve(a, b), InvalidInput);
  CHECK_THROWS_AS(success_curve(a, b), InvalidInput);
}

TEST_CASE("evaluate_track excludes frame 1 and checks coverage") {
  Sequence seq;
  seq.name = "s";
  for (int i = 0; i < 4; ++i) {
    seq.frames.emplace_back(8, 8, 1, i + 1);
    seq.groundtruth.push_back(BBox{1.0 + i, 1, 3, 3});
    seq.occluded.push_back(false);
  }
  std::vector<TrackRecord> recs;
  for (int t = 2; t <= 4; ++t) {
    TrackRecord r;
    r.frame = t;
    r.box = seq.groundtruth[t - 1];
    recs.push_back(r);
  }
  const SequenceEval ev = evaluate_track(recs, seq, "perfect");
  CHECK(ev.prec20 == 1.0);
  CHECK(ev.tracker == "perfect");
  recs.pop_back();
  CHECK_THROWS_AS(evaluate_track(recs, seq, "x"), InvalidInput);
}

TEST_CASE("mean curve") {
  const Curve a{"a", {0, 1}, {1.0, 0.0}};
  const Curve b{"b", {0, 1}, {0.5, 0.5}};
  const std::vector<Curve> both{a, b};
  const Curve m = mean_curve(both, "m");
  CHECK(m.values == std::vector<double>{0.75, 0.25});
  const Curve other{"o", {0, 2}, {1, 1}};
  const std::vector<Curve> mixed{a, other};
  CHECK_THROWS_AS(mean_curve(mixed, "x"), InvalidInput);
}

TEST_CASE("plots: CSV round trip, deterministic SVG, empty input rejected") {
  const auto dir = testutil::scratch_dir("eval_plots");
  std::mt19937_64 rng(4);
  const auto gt = random_boxes(rng, 25);
  const auto res = random_boxes(rng, 25);
  Curve c = success_curve(res, gt);
  c.name = "mine";
  const std::vector<Curve> curves{c, Curve{"other", c.thresholds, std::vector<double>(21, 0.25)}};
  emit_plots(curves, dir, "succ", "Success", "overlap", "rate");
  const Curve back = parse_curve_csv(read_text_file(dir / "succ_mine.csv"), "mine");
  CHECK(back.thresholds == c.thresholds);
  CHECK(back.values == c.values);
  const std::string svg1 = read_text_file(dir / "succ.svg");
  emit_plots(curves, dir, "succ", "Success", "overlap", "rate");
  CHECK(read_text_file(dir / "succ.svg") == svg1);
  CHECK(svg1.find("<polyline") != std::string::npos);
  CHECK(svg1.find("mine") != std::string::npos);
  CHECK_THROWS_AS(emit_plots(std::vector<Curve>{}, dir, "x", "", "", ""), InvalidInput);
}

TEST_CASE("score table") {
  SequenceEval e;
  e.tracker = "t";
  e.sequence = "s";
  e.prec20 = 1.0;
  e.auc = 0.75;
  const std::vector<SequenceEval> rows{e};
  CHECK(score_table_csv(rows) == "tracker,sequence,prec@20,auc\nt,s,1,0.75\n");
}

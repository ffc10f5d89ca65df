#include "cdcnn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cdcnn/errors.hpp"

namespace cdcnn {

void validate(const SamplerConfig& c) {
  auto fail = [](const std::string& why) { throw InvalidConfig("sampler: " + why); };
  if (!(c.lo > 0.0 && c.lo < c.hi && c.hi <= 1.0)) fail("require 0 < lo < hi <= 1");
  if (c.shift_max != 1 && c.shift_max != 2) fail("shift_max must be 1 or 2");
  if (c.m_p < 1 || c.m_n < 1) fail("m_p and m_n must be >= 1");
  if (c.update_m_p < 1 || c.update_m_n < 1) fail("update_m_p and update_m_n must be >= 1");
  if (c.sigma_xy < 0.0 || c.sigma_scale < 0.0) fail("candidate sigmas must be >= 0");
  if (!(c.neg_sigma_xy > 0.0) || c.neg_sigma_scale < 0.0) fail("negative proposal sigmas must be positive");
  if (!(c.update_neg_iou >= c.lo && c.update_neg_iou < c.update_pos_iou && c.update_pos_iou <= 1.0)) {
    fail("require lo <= update_neg_iou < update_pos_iou <= 1");
  }
  if (c.max_rejections < 1) fail("max_rejections must be >= 1");
}

std::vector<std::pair<int, int>> positive_offsets(int shift_max) {
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -shift_max; dy <= shift_max; ++dy) {
    for (int dx = -shift_max; dx <= shift_max; ++dx) {
      if (dx != 0 || dy != 0) offsets.emplace_back(dx, dy);
    }
  }
  return offsets;
}

Sampler::Sampler(SamplerConfig config, std::uint64_t seed) : config_(config), rng_(seed) { validate(config_); }

namespace {

std::string frame_tag(int frame_no) { return frame_no > 0 ? " at frame " + std::to_string(frame_no) : ""; }

// Clipped boxes thinner than a pixel are treated as degenerate.
std::optional<BBox> clip_usable(const BBox& box, FrameSize frame) {
  auto c = clip_box(box, frame.width, frame.height);
  if (!c || c->w < 1.0 || c->h < 1.0) return std::nullopt;
  return c;
}

}  // namespace

std::vector<BBox> Sampler::sample_positives(const BBox& gt, FrameSize frame, int frame_no) {
  require_valid(gt, "sample_positives");
  const auto offsets = positive_offsets(config_.shift_max);
  std::uniform_int_distribution<std::size_t> pick(0, offsets.size() - 1);
  std::vector<BBox> out;
  out.reserve(config_.m_p);
  int rejections = 0;
  while (static_cast<int>(out.size()) < config_.m_p) {
    const auto [dx, dy] = offsets[pick(rng_)];
    BBox b{gt.x + dx, gt.y + dy, gt.w, gt.h};
    if (!clip_usable(b, frame)) {
      if (++rejections > config_.max_rejections) {
        throw SamplerExhausted("sample_positives: no in-frame shift found" + frame_tag(frame_no));
      }
      continue;
    }
    out.push_back(b);
    rejections = 0;
  }
  return out;
}

std::vector<BBox> Sampler::sample_negatives(const BBox& gt, FrameSize frame, int frame_no) {
  require_valid(gt, "sample_negatives");
  const double spread = config_.neg_sigma_xy * std::max(gt.w, gt.h);
  std::normal_distribution<double> shift(0.0, spread);
  std::normal_distribution<double> log_scale(0.0, config_.neg_sigma_scale);
  std::vector<BBox> out;
  out.reserve(config_.m_n);
  int rejections = 0;
  while (static_cast<int>(out.size()) < config_.m_n) {
    const double s = std::exp(log_scale(rng_));
    const double dx = shift(rng_);
    const double dy = shift(rng_);
    const BBox proposal = box_from_center(gt.cx() + dx, gt.cy() + dy, gt.w * s, gt.h * s);
    const auto clipped = clip_usable(proposal, frame);
    ++negative_stats_.proposed;
    bool accepted = false;
    if (clipped) {
      const double overlap = iou(*clipped, gt);
      accepted = overlap >= config_.lo && overlap <= config_.hi;
    }
    if (!accepted) {
      if (++rejections > config_.max_rejections) {
        throw SamplerExhausted("sample_negatives: rejection cap exceeded" + frame_tag(frame_no));
      }
      continue;
    }
    ++negative_stats_.accepted;
    out.push_back(*clipped);
    rejections = 0;
  }
  return out;
}

std::vector<BBox> Sampler::sample_candidates(const BBox& prev, int m, FrameSize frame) {
  require_valid(prev, "sample_candidates");
  if (m < 0) throw InvalidInput("sample_candidates: negative count");
  const double spread = config_.sigma_xy * std::max(prev.w, prev.h);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<BBox> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    int attempts = 0;
    while (true) {
      const double dx = spread * unit(rng_);
      const double dy = spread * unit(rng_);
      const double s = std::exp(config_.sigma_scale * unit(rng_));
      const BBox proposal = box_from_center(prev.cx() + dx, prev.cy() + dy, prev.w * s, prev.h * s);
      if (auto clipped = clip_usable(proposal, frame)) {
        out.push_back(*clipped);
        break;
      }
      if (++attempts > config_.max_rejections) {
        throw SamplerExhausted("sample_candidates: every draw fell outside the frame");
      }
    }
  }
  return out;
}

LabeledBoxes Sampler::sample_update_batch(const BBox& pred, FrameSize frame, int frame_no) {
  require_valid(pred, "sample_update_batch");
  // Window of twice the predicted size, centred on the prediction.
  const auto window = clip_box(box_from_center(pred.cx(), pred.cy(), 2.0 * pred.w, 2.0 * pred.h),
                               frame.width, frame.height);
  if (!window) throw SamplerExhausted("sample_update_batch: window outside frame" + frame_tag(frame_no));

  std::uniform_real_distribution<double> ux(window->x, window->right());
  std::uniform_real_distribution<double> uy(window->y, window->bottom());
  std::normal_distribution<double> unit(0.0, 1.0);
  const double near_spread = 0.03 * std::max(pred.w, pred.h);

  LabeledBoxes out;
  int attempts = 0;
  bool near = true;
  while (static_cast<int>(out.positives.size()) < config_.update_m_p ||
         static_cast<int>(out.negatives.size()) < config_.update_m_n) {
    if (++attempts > config_.max_rejections) {
      throw SamplerExhausted("sample_update_batch: rejection cap exceeded" + frame_tag(frame_no));
    }
    // Alternate tight draws around the prediction (mostly positives) with
    // uniform draws over the window (mostly negatives); labels come from IoU only.
    double cx = 0.0;
    double cy = 0.0;
    double s = 1.0;
    if (near) {
      cx = pred.cx() + near_spread * unit(rng_);
      cy = pred.cy() + near_spread * unit(rng_);
      s = std::exp(0.02 * unit(rng_));
    } else {
      cx = ux(rng_);
      cy = uy(rng_);
      s = std::exp(config_.neg_sigma_scale * unit(rng_));
    }
    near = !near;
    if (cx < window->x || cx > window->right() || cy < window->y || cy > window->bottom()) continue;
    const auto clipped = clip_usable(box_from_center(cx, cy, pred.w * s, pred.h * s), frame);
    if (!clipped) continue;
    const double overlap = iou(*clipped, pred);
    if (overlap >= config_.update_pos_iou) {
      if (static_cast<int>(out.positives.size()) < config_.update_m_p) {
        out.positives.push_back(*clipped);
        attempts = 0;
      }
    } else if (overlap >= config_.lo && overlap <= config_.update_neg_iou) {
      if (static_cast<int>(out.negatives.size()) < config_.update_m_n) {
        out.negatives.push_back(*clipped);
        attempts = 0;
      }
    }
  }
  return out;
}

std::vector<TripletIndex> Sampler::build_triplets(std::size_t n_pos_t, std::size_t n_pos_t1, std::size_t n_neg_t,
                                                  std::size_t count) {
  if (n_pos_t == 0 || n_pos_t1 == 0 || n_neg_t == 0) throw InvalidInput("build_triplets: empty sample list");
  std::uniform_int_distribution<std::size_t> pj(0, n_pos_t - 1);
  std::uniform_int_distribution<std::size_t> pk(0, n_pos_t1 - 1);
  std::uniform_int_distribution<std::size_t> pl(0, n_neg_t - 1);
  std::vector<TripletIndex> out(count);
  for (auto& t : out) {
    t.pos_t = pj(rng_);
    t.pos_t1 = pk(rng_);
    t.neg_t = pl(rng_);
  }
  return out;
}

std::vector<Triplet> Sampler::build_triplets(std::span<const Patch> pos_t, std::span<const Patch> pos_t1,
                                             std::span<const Patch> neg_t, std::size_t count) {
  const auto index = build_triplets(pos_t.size(), pos_t1.size(), neg_t.size(), count);
  std::vector<Triplet> out;
  out.reserve(index.size());
  for (const auto& t : index) out.push_back(Triplet{pos_t[t.pos_t], pos_t1[t.pos_t1], neg_t[t.neg_t]});
  return out;
}

}  // namespace cdcnn

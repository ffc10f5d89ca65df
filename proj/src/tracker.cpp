#include "cdcnn/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cdcnn/errors.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/textio.hpp"

namespace cdcnn {

void validate(const TrackerConfig& c) {
  if (c.candidates < 1) throw InvalidConfig("tracker: candidates must be >= 1");
  if (c.top_k < 1 || c.top_k > c.candidates) throw InvalidConfig("tracker: require 1 <= top_k <= candidates");
  if (c.update_period < 1) throw InvalidConfig("tracker: update_period must be >= 1");
}

FrameEstimate track_frame(const Model& model, const Frame& frame, const BBox& prev, const TrackerConfig& config,
                          Sampler& sampler) {
  validate(config);
  const int side = patch_side_for(model, frame.channels);
  const FrameSize fs{static_cast<double>(frame.width), static_cast<double>(frame.height)};

  std::vector<BBox> candidates;
  try {
    candidates = sampler.sample_candidates(prev, config.candidates, fs);
  } catch (const SamplerExhausted& e) {
    throw TrackingFailure("frame " + std::to_string(frame.index) + ": " + e.what());
  }

  Eigen::MatrixXd inputs(model.dims.input, static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Patch p = crop_resize_normalize(frame, candidates[i], side);
    inputs.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(p.pixels.data(), model.dims.input);
  }
  const Eigen::RowVectorXd scores = object_scores(model, inputs);

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto k = static_cast<std::ptrdiff_t>(config.top_k);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = scores(static_cast<Eigen::Index>(a));
    const double sb = scores(static_cast<Eigen::Index>(b));
    return sa > sb || (sa == sb && a < b);
  });

  FrameEstimate est;
  for (std::ptrdiff_t i = 0; i < k; ++i) {
    const std::size_t idx = order[static_cast<std::size_t>(i)];
    est.top_indices.push_back(idx);
    est.top_boxes.push_back(candidates[idx]);
    est.top_scores.push_back(scores(static_cast<Eigen::Index>(idx)));
  }
  est.box = average_boxes(est.top_boxes);
  const Patch averaged = crop_resize_normalize(frame, est.box, side);
  est.score = object_scores(model, stack_patches(std::span<const Patch>(&averaged, 1), model.dims.input))(0);
  return est;
}

TrackResult track_sequence(Model model, const Sequence& sequence, const TrackerConfig& config,
                           const TrainConfig& train_config, const SamplerConfig& sampler_config,
                           const LossWeights& weights) {
  validate(config);
  validate_sequence(sequence);
  if (sequence.length() < 2) throw InvalidInput("track_sequence: need at least 2 frames");

  Sampler sampler(sampler_config, derive_seed(config.seed, "tracker"));
  TrackResult result;
  result.sequence = sequence.name;
  result.finetune_trace =
      finetune_initial(model, sequence.frames.front(), sequence.groundtruth.front(), train_config, weights, sampler);

  BBox prev = sequence.groundtruth.front();
  for (std::size_t i = 1; i < sequence.length(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const Frame& frame = sequence.frames[i];
    const int t = static_cast<int>(i + 1);
    TrackRecord rec;
    rec.frame = t;
    try {
      const FrameEstimate est = track_frame(model, frame, prev, config, sampler);
      rec.box = est.box;
      rec.score = est.score;
    } catch (const TrackingFailure& e) {
      spdlog::warn("{}: {}; carrying previous box forward", sequence.name, e.what());
      rec.box = prev;
      rec.score = 0.0;
      rec.failed = true;
    }
    if (!rec.failed && t % config.update_period == 0 && rec.score > config.update_score_threshold) {
      const UpdateOutcome outcome = finetune_update(model, frame, rec.box, train_config, weights, sampler);
      rec.updated = outcome.applied;
    }
    prev = rec.box;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.records.push_back(rec);
  }
  return result;
}

std::string track_result_csv(const TrackResult& result) {
  std::string out = "frame,x,y,w,h,score,updated\n";
  for (const auto& r : result.records) {
    out += std::to_string(r.frame) + "," + format_double(r.box.x) + "," + format_double(r.box.y) + "," +
           format_double(r.box.w) + "," + format_double(r.box.h) + "," + format_double(r.score) + "," +
           (r.updated ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<TrackRecord> parse_track_result_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<TrackRecord> records;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1) {
      if (trim(line) != "frame,x,y,w,h,score,updated") throw FormatError("results CSV: unexpected header");
      continue;
    }
    const std::string ctx = "results CSV line " + std::to_string(line_no);
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw FormatError(ctx + ": expected 7 fields");
    TrackRecord r;
    r.frame = static_cast<int>(parse_int(f[0], ctx));
    r.box = BBox{parse_double(f[1], ctx), parse_double(f[2], ctx), parse_double(f[3], ctx), parse_double(f[4], ctx)};
    r.score = parse_double(f[5], ctx);
    r.updated = parse_int(f[6], ctx) != 0;
    records.push_back(r);
  }
  return records;
}

}  // namespace cdcnn

#ifndef CDCNN_TRACKER_HPP_
#define CDCNN_TRACKER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cdcnn/dataset.hpp"
#include "cdcnn/net.hpp"
#include "cdcnn/sampler.hpp"
#include "cdcnn/train.hpp"

namespace cdcnn {

struct TrackerConfig {
  int candidates = 800;
  int top_k = 5;
  int update_period = 5;
  double update_score_threshold = 0.95;
  std::uint64_t seed = 1;
};

void validate(const TrackerConfig& config);

struct FrameEstimate {
  BBox box;
  double score = 0.0;  // object-centroid probability of the averaged box
  std::vector<std::size_t> top_indices;
  std::vector<BBox> top_boxes;
  std::vector<double> top_scores;
};

// Draws candidates around `prev`, scores them with a frozen forward pass,
// averages the top_k boxes (ties broken by lower candidate index) and
// re-scores the averaged box. Throws TrackingFailure when no usable candidate
// exists.
FrameEstimate track_frame(const Model& model, const Frame& frame, const BBox& prev, const TrackerConfig& config,
                          Sampler& sampler);

struct TrackRecord {
  int frame = 0;  // 1-based frame number
  BBox box;
  double score = 0.0;
  bool updated = false;
  bool failed = false;
  double seconds = 0.0;
};

struct TrackResult {
  std::string sequence;
  std::vector<TrackRecord> records;  // frames 2..T
  std::vector<LossRecord> finetune_trace;
};

// Online tracking loop: finetune on frame 1, then for t = 2..T estimate the
// box and, when t % update_period == 0 and the score exceeds the threshold,
// run an online update. Per-frame failures carry the previous box forward.
TrackResult track_sequence(Model model, const Sequence& sequence, const TrackerConfig& config,
                           const TrainConfig& train_config, const SamplerConfig& sampler_config,
                           const LossWeights& weights);

// "frame,x,y,w,h,score,updated" per tracked frame.
std::string track_result_csv(const TrackResult& result);
std::vector<TrackRecord> parse_track_result_csv(const std::string& text);

}  // namespace cdcnn

#endif  // CDCNN_TRACKER_HPP_

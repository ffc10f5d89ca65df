#ifndef CDCNN_SAMPLER_HPP_
#define CDCNN_SAMPLER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "cdcnn/geometry.hpp"
#include "cdcnn/rng.hpp"

namespace cdcnn {

struct SamplerConfig {
  double lo = 0.2;  // negative IoU window, lo <= IoU <= hi; lo must stay > 0
  double hi = 0.6;
  int shift_max = 2;  // positives: integer shifts with 1 <= max(|dx|,|dy|) <= shift_max
  int m_p = 16;
  int m_n = 16;
  double sigma_xy = 0.25;    // candidate centre std, fraction of max(w, h)
  double sigma_scale = 0.05; // candidate log-scale std
  double neg_sigma_xy = 0.5;  // negative proposal centre std, fraction of max(w, h)
  double neg_sigma_scale = 0.2;
  double update_pos_iou = 0.9;  // online update labels
  double update_neg_iou = 0.6;
  int update_m_p = 16;
  int update_m_n = 16;
  int max_rejections = 10000;  // consecutive draws without an accepted sample
};

// Throws InvalidConfig on an inconsistent configuration.
void validate(const SamplerConfig& config);

struct FrameSize {
  double width = 0.0;
  double height = 0.0;
};

struct LabeledBoxes {
  std::vector<BBox> positives;
  std::vector<BBox> negatives;
};

// Index triple (j, k, l) into the pos_t, pos_t1 and neg_t sample lists.
struct TripletIndex {
  std::size_t pos_t = 0;
  std::size_t pos_t1 = 0;
  std::size_t neg_t = 0;
};

struct Triplet {
  Patch pos_t;
  Patch pos_t1;
  Patch neg_t;
};

// Every draw goes through the owned RNG stream, so output is a pure function
// of (inputs, seed). Not shareable across threads.
struct ProposalStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

class Sampler {
 public:
  Sampler(SamplerConfig config, std::uint64_t seed);

  const SamplerConfig& config() const { return config_; }
  Rng& rng() { return rng_; }
  // Running totals of negative proposals drawn and accepted by this instance.
  const ProposalStats& negative_stats() const { return negative_stats_; }

  std::vector<BBox> sample_positives(const BBox& gt, FrameSize frame, int frame_no = 0);
  std::vector<BBox> sample_negatives(const BBox& gt, FrameSize frame, int frame_no = 0);
  std::vector<BBox> sample_candidates(const BBox& prev, int m, FrameSize frame);
  LabeledBoxes sample_update_batch(const BBox& pred, FrameSize frame, int frame_no = 0);

  std::vector<TripletIndex> build_triplets(std::size_t n_pos_t, std::size_t n_pos_t1, std::size_t n_neg_t,
                                           std::size_t count);
  std::vector<Triplet> build_triplets(std::span<const Patch> pos_t, std::span<const Patch> pos_t1,
                                      std::span<const Patch> neg_t, std::size_t count);

 private:
  SamplerConfig config_;
  Rng rng_;
  ProposalStats negative_stats_;
};

// All integer offsets (dx, dy) with 1 <= max(|dx|,|dy|) <= shift_max.
std::vector<std::pair<int, int>> positive_offsets(int shift_max);

}  // namespace cdcnn

#endif  // CDCNN_SAMPLER_HPP_

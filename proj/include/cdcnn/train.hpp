#ifndef CDCNN_TRAIN_HPP_
#define CDCNN_TRAIN_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdcnn/dataset.hpp"
#include "cdcnn/loss.hpp"
#include "cdcnn/net.hpp"
#include "cdcnn/optimizer.hpp"
#include "cdcnn/sampler.hpp"

namespace cdcnn {

struct TrainConfig {
  // Offline joint training.
  int iterations = 2000;
  int batch_size = 16;  // triplets per step
  OptimizerConfig optimizer{OptimizerKind::adam, 0.001, 0.9, 0.999, 1e-8};
  Variant variant = Variant::full;
  bool skip_occluded = true;
  std::uint64_t seed = 1;

  // First-frame finetuning and periodic online updates.
  int finetune_iterations = 300;
  OptimizerConfig finetune_optimizer{OptimizerKind::sgd, 0.001, 0.9, 0.999, 1e-8};
  int update_steps = 50;
  OptimizerConfig update_optimizer{OptimizerKind::sgd, 0.001, 0.9, 0.999, 1e-8};
  bool classifier_only_online = false;
};

void validate(const TrainConfig& config);

struct LossRecord {
  int step = 0;
  LossBreakdown loss;
};

struct TrainResult {
  Model model;
  std::vector<LossRecord> trace;
};

// Side of the square patch the model consumes for frames with `channels`
// channels; throws InvalidConfig when the input size is not side^2 * channels.
int patch_side_for(const Model& model, int channels);

std::vector<Patch> crop_all(const Frame& frame, std::span<const BBox> boxes, int side);

// One optimizer step per iteration on a fresh frame pair (t, t+1).
TrainResult train_offline(std::span<const Sequence> sequences, Model model, const TrainConfig& config,
                          const SamplerConfig& sampler_config, const LossWeights& weights);

// Same-frame objective on the first frame; sample pools are drawn once and
// re-paired every iteration. Returns the loss trace.
std::vector<LossRecord> finetune_initial(Model& model, const Frame& frame, const BBox& gt, const TrainConfig& config,
                                         const LossWeights& weights, Sampler& sampler);

struct UpdateOutcome {
  bool applied = false;
  std::string message;
  LossBreakdown last_loss;
};

// Online update around a prediction. Sampler exhaustion leaves the model
// untouched and is reported in the outcome (and logged) instead of thrown.
UpdateOutcome finetune_update(Model& model, const Frame& frame, const BBox& predicted, const TrainConfig& config,
                              const LossWeights& weights, Sampler& sampler);

std::string loss_trace_csv(std::span<const LossRecord> trace);

}  // namespace cdcnn

#endif  // CDCNN_TRAIN_HPP_

#include "cdcnn/train.hpp"

#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "cdcnn/errors.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/textio.hpp"

namespace cdcnn {

void validate(const TrainConfig& c) {
  if (c.iterations < 0 || c.finetune_iterations < 0 || c.update_steps < 0) {
    throw InvalidConfig("train: iteration counts must be >= 0");
  }
  if (c.batch_size < 1) throw InvalidConfig("train: batch_size must be >= 1");
  validate(c.optimizer);
  validate(c.finetune_optimizer);
  validate(c.update_optimizer);
}

int patch_side_for(const Model& model, int channels) {
  if (channels < 1 || model.dims.input % channels != 0) {
    throw InvalidConfig("network input " + std::to_string(model.dims.input) + " is not divisible by " +
                        std::to_string(channels) + " channels");
  }
  const int pixels = model.dims.input / channels;
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(pixels))));
  if (side * side != pixels) {
    throw InvalidConfig("network input " + std::to_string(model.dims.input) + " is not a square patch");
  }
  return side;
}

std::vector<Patch> crop_all(const Frame& frame, std::span<const BBox> boxes, int side) {
  std::vector<Patch> patches;
  patches.reserve(boxes.size());
  for (const BBox& b : boxes) patches.push_back(crop_resize_normalize(frame, b, side));
  return patches;
}

namespace {

FrameSize size_of(const Frame& f) { return FrameSize{static_cast<double>(f.width), static_cast<double>(f.height)}; }

struct FramePair {
  std::size_t sequence = 0;
  std::size_t t = 0;  // 0-based; uses frames t and t+1
};

std::vector<FramePair> eligible_pairs(std::span<const Sequence> sequences, bool skip_occluded) {
  std::vector<FramePair> pairs;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const Sequence& seq = sequences[s];
    validate_sequence(seq);
    if (seq.length() < 2) {
      throw InvalidInput("train_offline: sequence '" + seq.name + "' has fewer than 2 frames");
    }
    for (std::size_t t = 0; t + 1 < seq.length(); ++t) {
      if (skip_occluded && (seq.occluded[t] || seq.occluded[t + 1])) continue;
      pairs.push_back({s, t});
    }
  }
  return pairs;
}

LayerMask offline_mask(const VariantSpec& spec) {
  return spec.train_classifier_offline ? kAllLayers : kFeatureLayersOnly;
}

void require_finite(const Model& model, const std::string& where) {
  if (!model.params.all_finite()) throw NumericalFailure(where + ": parameters became non-finite");
}

}  // namespace

TrainResult train_offline(std::span<const Sequence> sequences, Model model, const TrainConfig& config,
                          const SamplerConfig& sampler_config, const LossWeights& weights) {
  validate(config);
  validate(weights);
  TrainResult result;
  if (config.iterations == 0) {
    result.model = std::move(model);
    return result;
  }
  if (sequences.empty()) throw InvalidInput("train_offline: no training sequences");

  const auto pairs = eligible_pairs(sequences, config.skip_occluded);
  if (pairs.empty()) throw InvalidInput("train_offline: no usable consecutive frame pairs");
  const int channels = sequences.front().frames.front().channels;
  const int side = patch_side_for(model, channels);
  const VariantSpec variant = variant_spec(config.variant);
  const LayerMask trainable = offline_mask(variant);

  Sampler sampler(sampler_config, derive_seed(config.seed, "offline-sampler"));
  Rng pick_rng(derive_seed(config.seed, "offline-pairs"));
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  OptimizerState state;
  result.trace.reserve(static_cast<std::size_t>(config.iterations));

  for (int step = 0; step < config.iterations; ++step) {
    const FramePair fp = pairs[pick(pick_rng)];
    const Sequence& seq = sequences[fp.sequence];
    const Frame& frame_t = seq.frames[fp.t];
    const Frame& frame_t1 = seq.frames[fp.t + 1];
    const int frame_no = static_cast<int>(fp.t + 1);

    std::vector<Patch> pos_t, pos_t1, neg_t;
    try {
      pos_t = crop_all(frame_t, sampler.sample_positives(seq.groundtruth[fp.t], size_of(frame_t), frame_no), side);
      if (variant.offline_pairs == PairMode::continuity) {
        pos_t1 = crop_all(frame_t1,
                          sampler.sample_positives(seq.groundtruth[fp.t + 1], size_of(frame_t1), frame_no + 1),
                          side);
      } else {
        pos_t1 = crop_all(frame_t, sampler.sample_positives(seq.groundtruth[fp.t], size_of(frame_t), frame_no),
                          side);
      }
      neg_t = crop_all(frame_t, sampler.sample_negatives(seq.groundtruth[fp.t], size_of(frame_t), frame_no), side);
    } catch (const SamplerExhausted& e) {
      throw SamplerExhausted("train_offline step " + std::to_string(step) + ", sequence '" + seq.name +
                             "': " + e.what());
    }

    const auto batch = sampler.build_triplets(pos_t, pos_t1, neg_t, static_cast<std::size_t>(config.batch_size));
    BackwardResult br;
    try {
      br = backward(model, batch, weights, variant.mask);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure("train_offline step " + std::to_string(step) + ": " + e.what());
    }
    optimizer_step(model.params, br.grads, state, config.optimizer, trainable);
    require_finite(model, "train_offline step " + std::to_string(step));
    result.trace.push_back({step, br.loss});
  }
  result.model = std::move(model);
  return result;
}

std::vector<LossRecord> finetune_initial(Model& model, const Frame& frame, const BBox& gt, const TrainConfig& config,
                                         const LossWeights& weights, Sampler& sampler) {
  validate(config);
  validate(weights);
  require_valid(gt, "finetune_initial");
  std::vector<LossRecord> trace;
  if (config.finetune_iterations == 0) return trace;

  const int side = patch_side_for(model, frame.channels);
  const FrameSize fs = size_of(frame);
  const auto pos_j = crop_all(frame, sampler.sample_positives(gt, fs, frame.index), side);
  const auto pos_k = crop_all(frame, sampler.sample_positives(gt, fs, frame.index), side);
  const auto neg = crop_all(frame, sampler.sample_negatives(gt, fs, frame.index), side);
  const LayerMask trainable = config.classifier_only_online ? kClassifierLayersOnly : kAllLayers;

  OptimizerState state;
  trace.reserve(static_cast<std::size_t>(config.finetune_iterations));
  for (int step = 0; step < config.finetune_iterations; ++step) {
    const auto batch = sampler.build_triplets(pos_j, pos_k, neg, static_cast<std::size_t>(config.batch_size));
    const BackwardResult br = backward(model, batch, weights, TermMask{});
    optimizer_step(model.params, br.grads, state, config.finetune_optimizer, trainable);
    require_finite(model, "finetune_initial step " + std::to_string(step));
    trace.push_back({step, br.loss});
  }
  return trace;
}

UpdateOutcome finetune_update(Model& model, const Frame& frame, const BBox& predicted, const TrainConfig& config,
                              const LossWeights& weights, Sampler& sampler) {
  UpdateOutcome outcome;
  if (config.update_steps == 0) {
    outcome.message = "no update steps configured";
    return outcome;
  }
  const int side = patch_side_for(model, frame.channels);
  LabeledBoxes boxes;
  try {
    boxes = sampler.sample_update_batch(predicted, size_of(frame), frame.index);
  } catch (const SamplerExhausted& e) {
    outcome.message = e.what();
    spdlog::warn("online update skipped at frame {}: {}", frame.index, e.what());
    return outcome;
  }
  const auto pos = crop_all(frame, boxes.positives, side);
  const auto neg = crop_all(frame, boxes.negatives, side);
  const LayerMask trainable = config.classifier_only_online ? kClassifierLayersOnly : kAllLayers;

  Model updated = model;
  OptimizerState state;
  for (int step = 0; step < config.update_steps; ++step) {
    const auto batch = sampler.build_triplets(pos, pos, neg, static_cast<std::size_t>(config.batch_size));
    const BackwardResult br = backward(updated, batch, weights, TermMask{});
    optimizer_step(updated.params, br.grads, state, config.update_optimizer, trainable);
    outcome.last_loss = br.loss;
  }
  require_finite(updated, "finetune_update at frame " + std::to_string(frame.index));
  model = std::move(updated);
  outcome.applied = true;
  return outcome;
}

std::string loss_trace_csv(std::span<const LossRecord> trace) {
  std::string out = "step,loss,loss_c,loss_d,loss_s\n";
  for (const auto& r : trace) {
    out += std::to_string(r.step) + "," + format_double(r.loss.total) + "," + format_double(r.loss.pair) + "," +
           format_double(r.loss.discrimination) + "," + format_double(r.loss.classification) + "\n";
  }
  return out;
}

}  // namespace cdcnn

#ifndef CDCNN_CONFIG_HPP_
#define CDCNN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdcnn/bound.hpp"
#include "cdcnn/dataset.hpp"
#include "cdcnn/loss.hpp"
#include "cdcnn/net.hpp"
#include "cdcnn/sampler.hpp"
#include "cdcnn/tracker.hpp"
#include "cdcnn/train.hpp"

namespace cdcnn {

struct NetConfig {
  int patch_side = 32;
  int channels = 1;
  int hidden1 = 128;
  int feature = 32;
  int hidden3 = 32;
  int hidden4 = 16;
  Activation activation = Activation::relu;

  NetDims dims() const { return NetDims{patch_side * patch_side * channels, hidden1, feature, hidden3, hidden4, 2}; }
};

struct GradcheckConfig {
  NetDims dims{64, 32, 16, 16, 8, 2};
  Activation activation = Activation::relu;
  int models = 5;
  int triplets = 4;
  double h = 1e-5;
  double tol = 1e-4;
};

struct BoundConfig {
  bound::BoundParams params;
  std::size_t trials = 10000;
  double bernoulli_p = 0.1;
  double adversarial_offset = 10.0;
  std::vector<int> sweep_m;  // optional extra m values for the error-bound report
};

struct AblateConfig {
  std::string suite = "distractor";  // easy | distractor | config (synth.* keys)
  int seeds = 5;
  int train_sequences = 2;
};

// One flat key=value file drives a whole experiment; keys carry their module
// as a prefix (sampler.lo=0.2). Every module seed is derived from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  SynthSpec synth;
  SamplerConfig sampler;
  NetConfig net;
  LossWeights loss;
  TrainConfig train;
  TrackerConfig tracker;
  GradcheckConfig gradcheck;
  BoundConfig bound;
  AblateConfig ablate;

  // Re-derives the per-module seeds from `seed`.
  void apply_master_seed();
};

// Parses key=value text; '#' starts a comment. Unknown or duplicate keys and
// unparsable values throw InvalidConfig naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical dump of every key, parseable by parse_config.
std::string config_to_text(const ExperimentConfig& config);

}  // namespace cdcnn

#endif  // CDCNN_CONFIG_HPP_

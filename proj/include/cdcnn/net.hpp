#ifndef CDCNN_NET_HPP_
#define CDCNN_NET_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cdcnn/geometry.hpp"
#include "cdcnn/loss.hpp"
#include "cdcnn/sampler.hpp"

namespace cdcnn {

enum class Activation { relu, tanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

// Layer widths: input -> hidden1 -> feature (fc1, fc2) -> hidden3 -> hidden4
// -> 2 logits (fc3, fc4, fc5).
struct NetDims {
  int input = 1024;
  int hidden1 = 128;
  int feature = 32;
  int hidden3 = 32;
  int hidden4 = 16;
  int output = 2;

  std::array<int, 6> chain() const { return {input, hidden1, feature, hidden3, hidden4, output}; }
  bool operator==(const NetDims&) const = default;
};

void validate(const NetDims& dims);

struct Dense {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

inline constexpr int kNumLayers = 5;
inline constexpr int kFeatureLayers = 2;  // fc1, fc2; the rest form the classifier

// The parameter set W = {W1..W5}; also used to hold gradients and optimizer moments.
struct ParamSet {
  std::array<Dense, kNumLayers> layers;

  std::size_t size() const;
  ParamSet zeros_like() const;
  bool all_finite() const;
  // Flat view helpers; order is layer by layer, weight (row-major) then bias.
  double& flat(std::size_t i);
  double flat(std::size_t i) const;
};

using Gradients = ParamSet;

struct Model {
  NetDims dims;
  Activation activation = Activation::relu;
  ParamSet params;

  std::size_t parameter_count() const { return params.size(); }
};

// He-scaled uniform initialization, zero biases; deterministic in `seed`.
Model init_model(const NetDims& dims, std::uint64_t seed, Activation activation = Activation::relu);

// Phi(x) = fc2(act(fc1(x))).
FeatureVec forward_features(const Model& model, std::span<const double> input);
// Batched: one column per sample.
Eigen::MatrixXd forward_features(const Model& model, const Eigen::MatrixXd& inputs);

// Softmax over fc5(act(fc4(act(fc3(f))))); returns the probability of the
// object-centroid class (logit index 1).
double forward_classifier(const Model& model, const FeatureRef& feature);
// Batched: one column of features per sample.
Eigen::RowVectorXd classifier_scores(const Model& model, const Eigen::MatrixXd& features);

// Stable two-class softmax; returns the probability of class 1.
double softmax_object_probability(double logit_background, double logit_object);

// Object-centroid scores for a batch of flattened patches (one per column).
Eigen::RowVectorXd object_scores(const Model& model, const Eigen::MatrixXd& inputs);

// Packs patches column-wise; throws InvalidInput on a size mismatch with `input_size`.
Eigen::MatrixXd stack_patches(std::span<const Patch> patches, int input_size);

// Batch means of the individual terms and of the weighted total.
struct LossBreakdown {
  double total = 0.0;
  double pair = 0.0;
  double discrimination = 0.0;
  double classification = 0.0;
};

struct BackwardResult {
  Gradients grads;
  LossBreakdown loss;
};

// Loss only (no gradients) over a triplet batch.
LossBreakdown evaluate_loss(const Model& model, std::span<const Triplet> batch, const LossWeights& weights,
                            const TermMask& mask = {});

// Analytic gradients of the batch-mean joint loss. Throws NumericalFailure
// naming the layer if any gradient is non-finite.
BackwardResult backward(const Model& model, std::span<const Triplet> batch, const LossWeights& weights,
                        const TermMask& mask = {});

struct GradEntry {
  int layer = 0;  // 0-based, fc1 == 0
  bool bias = false;
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  // entries whose +-h probe flips a ReLU
  std::array<double, kNumLayers> layer_max_error{};
  GradEntry worst;
  std::vector<GradEntry> failures;
};

// Relative error |a - n| / max(|a|, |n|, abs_floor).
double gradient_rel_error(double analytic, double numeric, double abs_floor);

// Central differences against the supplied analytic gradients. The error floor
// is the larger of abs_floor and the round-off level 8 eps |L| / (2 h tol).
GradCheckReport compare_gradients(const Model& model, std::span<const Triplet> batch, const LossWeights& weights,
                                  const TermMask& mask, const Gradients& analytic, double h, double tol,
                                  double abs_floor = 1e-7);
GradCheckReport finite_diff_check(const Model& model, std::span<const Triplet> batch, const LossWeights& weights,
                                  const TermMask& mask, double h = 1e-5, double tol = 1e-4,
                                  double abs_floor = 1e-7);

std::string model_to_text(const Model& model);
Model model_from_text(const std::string& text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::uint64_t parameter_hash(const ParamSet& params);

}  // namespace cdcnn

#endif  // CDCNN_NET_HPP_

#ifndef CDCNN_LOSS_HPP_
#define CDCNN_LOSS_HPP_

#include <optional>
#include <string_view>

#include <Eigen/Core>

namespace cdcnn {

using FeatureVec = Eigen::VectorXd;
using FeatureRef = Eigen::Ref<const Eigen::VectorXd>;

struct LossWeights {
  double lambda = 10.0;  // weight of the discrimination term
  double mu = 10.0;      // weight of the classification term
  double beta = 1.0;     // sharpness of the discrimination term
  double p_floor = 1e-12;
};

void validate(const LossWeights& weights);

// Which terms of the joint objective are active. `pair` is the continuity
// term offline and the same-frame positive term during finetuning.
struct TermMask {
  bool pair = true;
  bool discrimination = true;
  bool classification = true;
};

// Source of the second positive in a triplet: the next frame (continuity) or
// the same frame (finetuning, and offline for the wo-C-learning variant).
enum class PairMode { continuity, same_frame };

enum class Variant { full, wo_c_learning, wo_dloss, sloss_only, tarspec };

struct VariantSpec {
  PairMode offline_pairs = PairMode::continuity;
  TermMask mask;
  bool train_classifier_offline = true;
};

VariantSpec variant_spec(Variant variant);
std::string_view variant_name(Variant variant);
// Accepts the names printed by variant_name; throws InvalidConfig otherwise.
Variant parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::full, Variant::wo_c_learning, Variant::wo_dloss,
                                           Variant::sloss_only, Variant::tarspec};

// Squared Euclidean distance between consecutive-frame positives.
double loss_c(const FeatureRef& a, const FeatureRef& b);
// exp(-beta * ||p - n||^2); in (0, 1].
double loss_d(const FeatureRef& pos, const FeatureRef& neg, double beta);
// -log((1 - p_neg) * p_pos), both probabilities clamped to [p_floor, 1 - p_floor].
double loss_s(double p_pos, double p_neg, double p_floor);
// Same kernel as loss_c, applied to two positives of one frame.
double loss_p(const FeatureRef& a, const FeatureRef& b);

struct LossTerms {
  std::optional<double> continuity;  // required when mode == continuity
  std::optional<double> same_frame;  // required when mode == same_frame
  double discrimination = 0.0;
  double classification = 0.0;
};

// Weighted combination pair + lambda * D + mu * S with masked terms dropped.
// Throws InvalidInput if the pair value required by `mode` is missing.
double total_loss(const LossTerms& terms, const LossWeights& weights, PairMode mode, const TermMask& mask = {});

}  // namespace cdcnn

#endif  // CDCNN_LOSS_HPP_

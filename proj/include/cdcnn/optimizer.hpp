#ifndef CDCNN_OPTIMIZER_HPP_
#define CDCNN_OPTIMIZER_HPP_

#include <array>
#include <string_view>

#include "cdcnn/net.hpp"

namespace cdcnn {

enum class OptimizerKind { sgd, adam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void validate(const OptimizerConfig& config);

struct OptimizerState {
  ParamSet first_moment;
  ParamSet second_moment;
  long long step = 0;
};

using LayerMask = std::array<bool, kNumLayers>;
inline constexpr LayerMask kAllLayers{true, true, true, true, true};
inline constexpr LayerMask kFeatureLayersOnly{true, true, false, false, false};
inline constexpr LayerMask kClassifierLayersOnly{false, false, true, true, true};

// SGD: theta -= lr * g. Adam: bias-corrected moments. Layers masked out are
// left untouched, moments included. Throws InvalidInput on a shape mismatch.
void optimizer_step(ParamSet& params, const Gradients& grads, OptimizerState& state,
                    const OptimizerConfig& config, const LayerMask& trainable = kAllLayers);

}  // namespace cdcnn

#endif  // CDCNN_OPTIMIZER_HPP_

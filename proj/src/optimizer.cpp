#include "cdcnn/optimizer.hpp"

#include <cmath>
#include <string>

#include "cdcnn/errors.hpp"

namespace cdcnn {

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw InvalidConfig("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

void validate(const OptimizerConfig& c) {
  if (!(c.learning_rate > 0.0)) throw InvalidConfig("optimizer: learning_rate must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw InvalidConfig("optimizer: adam betas must lie in [0, 1)");
  }
  if (!(c.epsilon > 0.0)) throw InvalidConfig("optimizer: epsilon must be > 0");
}

namespace {

void require_same_shape(const ParamSet& a, const ParamSet& b) {
  for (int i = 0; i < kNumLayers; ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols() || x.bias.size() != y.bias.size()) {
      throw InvalidInput("optimizer_step: shape mismatch in layer fc" + std::to_string(i + 1));
    }
  }
}

}  // namespace

void optimizer_step(ParamSet& params, const Gradients& grads, OptimizerState& state, const OptimizerConfig& config,
                    const LayerMask& trainable) {
  require_same_shape(params, grads);
  if (config.kind == OptimizerKind::sgd) {
    for (int i = 0; i < kNumLayers; ++i) {
      if (!trainable[i]) continue;
      params.layers[i].weight -= config.learning_rate * grads.layers[i].weight;
      params.layers[i].bias -= config.learning_rate * grads.layers[i].bias;
    }
    ++state.step;
    return;
  }

  if (state.step == 0 || state.first_moment.size() != params.size()) {
    state.first_moment = params.zeros_like();
    state.second_moment = params.zeros_like();
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    theta.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
  };
  for (int i = 0; i < kNumLayers; ++i) {
    if (!trainable[i]) continue;
    update(params.layers[i].weight, grads.layers[i].weight, state.first_moment.layers[i].weight,
           state.second_moment.layers[i].weight);
    update(params.layers[i].bias, grads.layers[i].bias, state.first_moment.layers[i].bias,
           state.second_moment.layers[i].bias);
  }
}

}  // namespace cdcnn

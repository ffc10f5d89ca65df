#include <doctest.h>

#include <cmath>

#include "cdcnn/errors.hpp"
#include "cdcnn/net.hpp"
#include "cdcnn/optimizer.hpp"

using namespace cdcnn;

namespace {

ParamSet filled(const Model& m, double value) {
  ParamSet p = m.params.zeros_like();
  for (std::size_t i = 0; i < p.size(); ++i) p.flat(i) = value;
  return p;
}

const NetDims kTiny{4, 3, 2, 3, 3, 2};

}  // namespace

TEST_CASE("sgd with zero gradient leaves parameters unchanged") {
  Model m = init_model(kTiny, 1);
  const auto h = parameter_hash(m.params);
  OptimizerState st;
  optimizer_step(m.params, m.params.zeros_like(), st, OptimizerConfig{OptimizerKind::sgd, 0.1});
  CHECK(parameter_hash(m.params) == h);
}

TEST_CASE("sgd step example") {
  Model m = init_model(kTiny, 1);
  m.params = filled(m, 1.0);
  OptimizerState st;
  optimizer_step(m.params, filled(m, 2.0), st, OptimizerConfig{OptimizerKind::sgd, 0.1});
  for (std::size_t i = 0; i < m.params.size(); ++i) CHECK(m.params.flat(i) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("first adam step is about -lr * sign(g)") {
  Model m = init_model(kTiny, 2);
  const ParamSet before = m.params;
  OptimizerState st;
  const OptimizerConfig cfg{OptimizerKind::adam, 0.001, 0.9, 0.999, 1e-8};
  optimizer_step(m.params, filled(m, 1.0), st, cfg);
  CHECK(st.step == 1);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    CHECK(m.params.flat(i) - before.flat(i) == doctest::Approx(-0.001).epsilon(1e-6));
  }
}

TEST_CASE("adam matches a scalar reference over several steps") {
  Model m = init_model(kTiny, 3);
  m.params = filled(m, 0.5);
  OptimizerState st;
  const OptimizerConfig cfg{OptimizerKind::adam, 0.01, 0.9, 0.999, 1e-8};
  double theta = 0.5, mom = 0.0, vel = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 0.3 * t - 0.7;
    optimizer_step(m.params, filled(m, g), st, cfg);
    mom = 0.9 * mom + 0.1 * g;
    vel = 0.999 * vel + 0.001 * g * g;
    const double mhat = mom / (1 - std::pow(0.9, t));
    const double vhat = vel / (1 - std::pow(0.999, t));
    theta -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
  }
  for (std::size_t i = 0; i < m.params.size(); ++i) CHECK(std::abs(m.params.flat(i) - theta) < 1e-14);
}

TEST_CASE("layer mask freezes layers") {
  Model m = init_model(kTiny, 4);
  const ParamSet before = m.params;
  OptimizerState st;
  optimizer_step(m.params, filled(m, 1.0), st, OptimizerConfig{OptimizerKind::sgd, 0.1}, kFeatureLayersOnly);
  CHECK(m.params.layers[0].weight != before.layers[0].weight);
  CHECK(m.params.layers[1].bias != before.layers[1].bias);
  for (int l = 2; l < kNumLayers; ++l) {
    CHECK(m.params.layers[l].weight == before.layers[l].weight);
    CHECK(m.params.layers[l].bias == before.layers[l].bias);
  }
}

TEST_CASE("shape mismatch and bad configs are rejected") {
  Model m = init_model(kTiny, 5);
  const Model other = init_model(NetDims{5, 3, 2, 3, 3, 2}, 5);
  OptimizerState st;
  CHECK_THROWS_AS(optimizer_step(m.params, other.params, st, OptimizerConfig{}), InvalidInput);
  CHECK_THROWS_AS(validate(OptimizerConfig{OptimizerKind::sgd, 0.0}), InvalidConfig);
  CHECK_THROWS_AS(validate(OptimizerConfig{OptimizerKind::adam, 0.1, 1.0}), InvalidConfig);
  CHECK(parse_optimizer("adam") == OptimizerKind::adam);
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), InvalidConfig);
}

#include "cdcnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdcnn/errors.hpp"

namespace cdcnn {

void validate(const LossWeights& w) {
  if (!(w.lambda >= 0.0) || !(w.mu >= 0.0)) throw InvalidConfig("loss: lambda and mu must be >= 0");
  if (!(w.beta > 0.0)) throw InvalidConfig("loss: beta must be > 0");
  if (!(w.p_floor > 0.0 && w.p_floor < 0.5)) throw InvalidConfig("loss: p_floor must be in (0, 0.5)");
}

VariantSpec variant_spec(Variant variant) {
  VariantSpec spec;
  switch (variant) {
    case Variant::full:
      break;
    case Variant::wo_c_learning:
      spec.offline_pairs = PairMode::same_frame;
      break;
    case Variant::wo_dloss:
      spec.mask.discrimination = false;
      break;
    case Variant::sloss_only:
      spec.mask.pair = false;
      spec.mask.discrimination = false;
      break;
    case Variant::tarspec:
      spec.train_classifier_offline = false;
      break;
  }
  return spec;
}

std::string_view variant_name(Variant variant) {
  switch (variant) {
    case Variant::full:
      return "full";
    case Variant::wo_c_learning:
      return "wo-C-learning";
    case Variant::wo_dloss:
      return "wo-Dloss";
    case Variant::sloss_only:
      return "SlossOnly";
    case Variant::tarspec:
      return "tarspec";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (variant_name(v) == name) return v;
  }
  throw InvalidConfig("unknown variant '" + std::string(name) +
                      "' (expected full, wo-C-learning, wo-Dloss, SlossOnly or tarspec)");
}

namespace {

void require_same_length(const FeatureRef& a, const FeatureRef& b, const char* what) {
  if (a.size() != b.size()) {
    throw InvalidInput(std::string(what) + ": feature length mismatch (" + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  }
}

}  // namespace

double loss_c(const FeatureRef& a, const FeatureRef& b) {
  require_same_length(a, b, "loss_c");
  return (a - b).squaredNorm();
}

double loss_d(const FeatureRef& pos, const FeatureRef& neg, double beta) {
  require_same_length(pos, neg, "loss_d");
  if (!(beta > 0.0)) throw InvalidInput("loss_d: beta must be > 0");
  return std::exp(-beta * (pos - neg).squaredNorm());
}

double loss_s(double p_pos, double p_neg, double p_floor) {
  const double pp = std::clamp(p_pos, p_floor, 1.0 - p_floor);
  const double pn = std::clamp(p_neg, p_floor, 1.0 - p_floor);
  return -std::log(pp) - std::log1p(-pn);
}

double loss_p(const FeatureRef& a, const FeatureRef& b) {
  require_same_length(a, b, "loss_p");
  return loss_c(a, b);
}

double total_loss(const LossTerms& terms, const LossWeights& weights, PairMode mode, const TermMask& mask) {
  const auto& pair = mode == PairMode::continuity ? terms.continuity : terms.same_frame;
  double total = 0.0;
  if (mask.pair) {
    if (!pair) {
      throw InvalidInput(mode == PairMode::continuity ? "total_loss: continuity term missing"
                                                      : "total_loss: same-frame term missing");
    }
    total += *pair;
  }
  if (mask.discrimination) total += weights.lambda * terms.discrimination;
  if (mask.classification) total += weights.mu * terms.classification;
  return total;
}

}  // namespace cdcnn

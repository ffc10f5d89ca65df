#include "cdcnn/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "cdcnn/errors.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/textio.hpp"

namespace cdcnn {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

std::string_view activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw InvalidConfig("unknown nonlinearity '" + std::string(name) + "'");
}

void validate(const NetDims& dims) {
  for (int d : dims.chain()) {
    if (d <= 0) throw InvalidConfig("net: every layer dimension must be positive");
  }
  if (dims.output != 2) throw InvalidConfig("net: the classifier emits exactly 2 logits");
}

// ---------------------------------------------------------------------------
// ParamSet

std::size_t ParamSet::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  for (int i = 0; i < kNumLayers; ++i) {
    z.layers[i].weight = MatrixXd::Zero(layers[i].weight.rows(), layers[i].weight.cols());
    z.layers[i].bias = VectorXd::Zero(layers[i].bias.size());
  }
  return z;
}

bool ParamSet::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const Dense& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

double& ParamSet::flat(std::size_t i) {
  for (auto& l : layers) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (i < nw) {
      const auto cols = static_cast<std::size_t>(l.weight.cols());
      return l.weight(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols));
    }
    i -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (i < nb) return l.bias(static_cast<Eigen::Index>(i));
    i -= nb;
  }
  throw InvalidInput("ParamSet::flat: index out of range");
}

double ParamSet::flat(std::size_t i) const { return const_cast<ParamSet&>(*this).flat(i); }

Model init_model(const NetDims& dims, std::uint64_t seed, Activation activation) {
  validate(dims);
  Model model;
  model.dims = dims;
  model.activation = activation;
  Rng rng(seed);
  const auto chain = dims.chain();
  for (int i = 0; i < kNumLayers; ++i) {
    const int in = chain[i];
    const int out = chain[i + 1];
    const double bound = std::sqrt(6.0 / in);  // std = sqrt(2 / fan_in)
    std::uniform_real_distribution<double> u(-bound, bound);
    Dense& layer = model.params.layers[i];
    layer.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = u(rng);
    }
    layer.bias = VectorXd::Zero(out);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

MatrixXd activate(const MatrixXd& z, Activation a) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

// Derivative of the activation expressed through its pre-activation.
MatrixXd activate_grad(const MatrixXd& z, Activation a) {
  if (a == Activation::relu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - z.array().tanh().square()).matrix();
}

MatrixXd affine(const Dense& layer, const MatrixXd& x) {
  return (layer.weight * x).colwise() + layer.bias;
}

struct Forward {
  MatrixXd z1, a1, f, z3, a3, z4, a4, z5;
  RowVectorXd p;
};

void check_input_rows(const Model& model, Eigen::Index rows) {
  if (rows != model.dims.input) {
    throw InvalidInput("forward: input length " + std::to_string(rows) + " does not match network input " +
                       std::to_string(model.dims.input));
  }
}

Forward run_forward(const Model& model, const MatrixXd& x) {
  check_input_rows(model, x.rows());
  const auto& L = model.params.layers;
  Forward fw;
  fw.z1 = affine(L[0], x);
  fw.a1 = activate(fw.z1, model.activation);
  fw.f = affine(L[1], fw.a1);
  fw.z3 = affine(L[2], fw.f);
  fw.a3 = activate(fw.z3, model.activation);
  fw.z4 = affine(L[3], fw.a3);
  fw.a4 = activate(fw.z4, model.activation);
  fw.z5 = affine(L[4], fw.a4);
  fw.p.resize(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) fw.p(i) = softmax_object_probability(fw.z5(0, i), fw.z5(1, i));
  return fw;
}

}  // namespace

double softmax_object_probability(double logit_background, double logit_object) {
  const double top = std::max(logit_background, logit_object);
  const double e0 = std::exp(logit_background - top);
  const double e1 = std::exp(logit_object - top);
  return e1 / (e0 + e1);
}

FeatureVec forward_features(const Model& model, std::span<const double> input) {
  check_input_rows(model, static_cast<Eigen::Index>(input.size()));
  const Eigen::Map<const VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  const auto& L = model.params.layers;
  const VectorXd a1 = activate(L[0].weight * x + L[0].bias, model.activation);
  return L[1].weight * a1 + L[1].bias;
}

MatrixXd forward_features(const Model& model, const MatrixXd& inputs) {
  check_input_rows(model, inputs.rows());
  const auto& L = model.params.layers;
  return affine(L[1], activate(affine(L[0], inputs), model.activation));
}

RowVectorXd classifier_scores(const Model& model, const MatrixXd& features) {
  if (features.rows() != model.dims.feature) {
    throw InvalidInput("classifier_scores: feature length " + std::to_string(features.rows()) +
                       " does not match " + std::to_string(model.dims.feature));
  }
  const auto& L = model.params.layers;
  const MatrixXd a3 = activate(affine(L[2], features), model.activation);
  const MatrixXd a4 = activate(affine(L[3], a3), model.activation);
  const MatrixXd z5 = affine(L[4], a4);
  RowVectorXd p(features.cols());
  for (Eigen::Index i = 0; i < features.cols(); ++i) p(i) = softmax_object_probability(z5(0, i), z5(1, i));
  return p;
}

double forward_classifier(const Model& model, const FeatureRef& feature) {
  return classifier_scores(model, MatrixXd(feature))(0);
}

RowVectorXd object_scores(const Model& model, const MatrixXd& inputs) {
  return classifier_scores(model, forward_features(model, inputs));
}

MatrixXd stack_patches(std::span<const Patch> patches, int input_size) {
  MatrixXd x(input_size, static_cast<Eigen::Index>(patches.size()));
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (static_cast<int>(patches[i].size()) != input_size) {
      throw InvalidInput("patch has " + std::to_string(patches[i].size()) + " values, network expects " +
                         std::to_string(input_size));
    }
    x.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const VectorXd>(patches[i].pixels.data(), input_size);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Loss and backward

namespace {

// Columns [0,B) = pos_t, [B,2B) = pos_t1, [2B,3B) = neg_t.
MatrixXd stack_batch(const Model& model, std::span<const Triplet> batch) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const int r = model.dims.input;
  MatrixXd x(r, 3 * b);
  auto put = [&](Eigen::Index col, const Patch& p) {
    if (static_cast<int>(p.size()) != r) {
      throw InvalidInput("triplet patch has " + std::to_string(p.size()) + " values, network expects " +
                         std::to_string(r));
    }
    x.col(col) = Eigen::Map<const VectorXd>(p.pixels.data(), r);
  };
  for (Eigen::Index i = 0; i < b; ++i) {
    put(i, batch[i].pos_t);
    put(b + i, batch[i].pos_t1);
    put(2 * b + i, batch[i].neg_t);
  }
  return x;
}

LossBreakdown batch_loss(const Forward& fw, Eigen::Index b, const LossWeights& w, const TermMask& mask) {
  LossBreakdown out;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double pair = loss_c(fw.f.col(i), fw.f.col(b + i));
    const double disc = loss_d(fw.f.col(i), fw.f.col(2 * b + i), w.beta);
    const double cls = loss_s(fw.p(i), fw.p(2 * b + i), w.p_floor);
    out.pair += pair;
    out.discrimination += disc;
    out.classification += cls;
    LossTerms terms{pair, pair, disc, cls};
    out.total += total_loss(terms, w, PairMode::continuity, mask);
  }
  const double n = static_cast<double>(b);
  out.total /= n;
  out.pair /= n;
  out.discrimination /= n;
  out.classification /= n;
  return out;
}

void check_batch(std::span<const Triplet> batch) {
  if (batch.empty()) throw InvalidInput("empty triplet batch");
}

}  // namespace

LossBreakdown evaluate_loss(const Model& model, std::span<const Triplet> batch, const LossWeights& weights,
                            const TermMask& mask) {
  check_batch(batch);
  const Forward fw = run_forward(model, stack_batch(model, batch));
  return batch_loss(fw, static_cast<Eigen::Index>(batch.size()), weights, mask);
}

BackwardResult backward(const Model& model, std::span<const Triplet> batch, const LossWeights& w,
                        const TermMask& mask) {
  check_batch(batch);
  const MatrixXd x = stack_batch(model, batch);
  const Forward fw = run_forward(model, x);
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(b);
  const auto& L = model.params.layers;

  BackwardResult result;
  result.loss = batch_loss(fw, b, w, mask);

  MatrixXd d_feat = MatrixXd::Zero(fw.f.rows(), fw.f.cols());
  MatrixXd d_logits = MatrixXd::Zero(2, fw.f.cols());

  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::Index a = i, p = b + i, n = 2 * b + i;
    if (mask.pair) {
      const VectorXd g = 2.0 * inv_b * (fw.f.col(a) - fw.f.col(p));
      d_feat.col(a) += g;
      d_feat.col(p) -= g;
    }
    if (mask.discrimination && w.lambda != 0.0) {
      const VectorXd diff = fw.f.col(a) - fw.f.col(n);
      const double ld = std::exp(-w.beta * diff.squaredNorm());
      const VectorXd g = (w.lambda * inv_b * -2.0 * w.beta * ld) * diff;
      d_feat.col(a) += g;
      d_feat.col(n) -= g;
    }
    if (mask.classification && w.mu != 0.0) {
      const double hi = 1.0 - w.p_floor;
      const double pa = fw.p(a);
      const double pn = fw.p(n);
      // d/dz of -log p(obj) is -(1 - p) for the object logit, +(1 - p) for background.
      if (pa > w.p_floor && pa < hi) {
        d_logits(1, a) = -w.mu * inv_b * (1.0 - pa);
        d_logits(0, a) = w.mu * inv_b * (1.0 - pa);
      }
      // d/dz of -log(1 - p(obj)) is +p for the object logit, -p for background.
      if (pn > w.p_floor && pn < hi) {
        d_logits(1, n) = w.mu * inv_b * pn;
        d_logits(0, n) = -w.mu * inv_b * pn;
      }
    }
  }

  Gradients& g = result.grads;
  auto set = [&](int layer, const MatrixXd& dz, const MatrixXd& in) {
    g.layers[layer].weight = dz * in.transpose();
    g.layers[layer].bias = dz.rowwise().sum();
  };
  set(4, d_logits, fw.a4);
  const MatrixXd dz4 = (L[4].weight.transpose() * d_logits).cwiseProduct(activate_grad(fw.z4, model.activation));
  set(3, dz4, fw.a3);
  const MatrixXd dz3 = (L[3].weight.transpose() * dz4).cwiseProduct(activate_grad(fw.z3, model.activation));
  set(2, dz3, fw.f);
  d_feat += L[2].weight.transpose() * dz3;
  set(1, d_feat, fw.a1);
  const MatrixXd dz1 = (L[1].weight.transpose() * d_feat).cwiseProduct(activate_grad(fw.z1, model.activation));
  set(0, dz1, x);

  for (int i = 0; i < kNumLayers; ++i) {
    if (!g.layers[i].weight.allFinite() || !g.layers[i].bias.allFinite()) {
      throw NumericalFailure("backward: non-finite gradient in layer fc" + std::to_string(i + 1));
    }
  }
  if (!std::isfinite(result.loss.total)) throw NumericalFailure("backward: non-finite loss");
  return result;
}

// ---------------------------------------------------------------------------
// Finite differences

double gradient_rel_error(double analytic, double numeric, double abs_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

using Pattern = std::vector<bool>;

Pattern relu_pattern(const Forward& fw) {
  Pattern pattern;
  for (const MatrixXd* z : {&fw.z1, &fw.z3, &fw.z4}) {
    for (Eigen::Index i = 0; i < z->size(); ++i) pattern.push_back(z->data()[i] > 0.0);
  }
  return pattern;
}

}  // namespace

GradCheckReport compare_gradients(const Model& model, std::span<const Triplet> batch, const LossWeights& weights,
                                  const TermMask& mask, const Gradients& analytic, double h, double tol,
                                  double abs_floor) {
  GradCheckReport report;
  if (model.parameter_count() == 0) return report;
  check_batch(batch);
  if (analytic.size() != model.parameter_count()) throw InvalidInput("compare_gradients: gradient shape mismatch");

  const MatrixXd x = stack_batch(model, batch);
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  Model probe = model;
  const bool relu = model.activation == Activation::relu;

  std::size_t flat = 0;
  for (int layer = 0; layer < kNumLayers; ++layer) {
    const auto& dense = model.params.layers[layer];
    const std::size_t nw = static_cast<std::size_t>(dense.weight.size());
    const std::size_t count = nw + static_cast<std::size_t>(dense.bias.size());
    for (std::size_t k = 0; k < count; ++k, ++flat) {
      double& theta = probe.params.flat(flat);
      const double saved = theta;
      theta = saved + h;
      const Forward up = run_forward(probe, x);
      theta = saved - h;
      const Forward down = run_forward(probe, x);
      theta = saved;
      if (relu && relu_pattern(up) != relu_pattern(down)) {
        ++report.skipped_kinks;
        continue;
      }
      const double l_up = batch_loss(up, b, weights, mask).total;
      const double l_down = batch_loss(down, b, weights, mask).total;
      const double numeric = (l_up - l_down) / (2.0 * h);
      // A few ulps of the loss, divided by 2h, must not read as a tol violation.
      const double roundoff = 8.0 * kEps * std::max(std::abs(l_up), std::abs(l_down)) / (2.0 * h * tol);
      const double an = analytic.flat(flat);
      GradEntry entry;
      entry.layer = layer;
      entry.bias = k >= nw;
      const auto cols = static_cast<std::size_t>(dense.weight.cols());
      entry.row = static_cast<int>(entry.bias ? k - nw : k / cols);
      entry.col = static_cast<int>(entry.bias ? 0 : k % cols);
      entry.analytic = an;
      entry.numeric = numeric;
      entry.rel_error = gradient_rel_error(an, numeric, std::max(abs_floor, roundoff));
      ++report.checked;
      report.layer_max_error[layer] = std::max(report.layer_max_error[layer], entry.rel_error);
      if (entry.rel_error > report.max_rel_error || report.checked == 1) {
        report.max_rel_error = entry.rel_error;
        report.worst = entry;
      }
      if (!(entry.rel_error < tol)) report.failures.push_back(entry);
    }
  }
  report.passed = report.failures.empty();
  return report;
}

GradCheckReport finite_diff_check(const Model& model, std::span<const Triplet> batch, const LossWeights& weights,
                                  const TermMask& mask, double h, double tol, double abs_floor) {
  if (model.parameter_count() == 0) return GradCheckReport{};
  const BackwardResult analytic = backward(model, batch, weights, mask);
  return compare_gradients(model, batch, weights, mask, analytic.grads, h, tol, abs_floor);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::string_view kMagic = "CDNN1";

void append_row(std::string& out, const double* values, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += format_double(values[i]);
  }
  out += '\n';
}

}  // namespace

std::string model_to_text(const Model& model) {
  std::string out;
  out += kMagic;
  out += '\n';
  const auto chain = model.dims.chain();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(chain[i]);
  }
  out += '\n';
  out += activation_name(model.activation);
  out += '\n';
  for (const Dense& layer : model.params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      const VectorXd row = layer.weight.row(r).transpose();
      append_row(out, row.data(), row.size());
    }
    append_row(out, layer.bias.data(), layer.bias.size());
  }
  return out;
}

Model model_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) {
      throw FormatError("model file truncated after line " + std::to_string(line_no));
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  auto ctx = [&] { return "model file line " + std::to_string(line_no); };
  auto read_values = [&](Eigen::Index expected) {
    const std::string row = next_line();
    std::vector<double> values;
    for (auto tok : split(row, ' ')) {
      if (!trim(tok).empty()) values.push_back(parse_double(tok, ctx()));
    }
    if (static_cast<Eigen::Index>(values.size()) != expected) {
      throw FormatError(ctx() + ": expected " + std::to_string(expected) + " values, got " +
                        std::to_string(values.size()));
    }
    return values;
  };

  const std::string magic = next_line();
  if (magic != kMagic) throw FormatError(ctx() + ": bad magic '" + magic + "' (expected CDNN1)");

  std::vector<long long> chain;
  const std::string dims_line = next_line();
  for (auto tok : split(dims_line, ' ')) {
    if (!trim(tok).empty()) chain.push_back(parse_int(tok, ctx()));
  }
  if (chain.size() != 6) throw FormatError(ctx() + ": expected 6 layer dimensions");
  Model model;
  model.dims = NetDims{static_cast<int>(chain[0]), static_cast<int>(chain[1]), static_cast<int>(chain[2]),
                       static_cast<int>(chain[3]), static_cast<int>(chain[4]), static_cast<int>(chain[5])};
  try {
    validate(model.dims);
  } catch (const InvalidConfig& e) {
    throw FormatError(ctx() + ": " + e.what());
  }
  try {
    model.activation = parse_activation(std::string(trim(next_line())));
  } catch (const InvalidConfig& e) {
    throw FormatError(ctx() + ": " + e.what());
  }

  const auto dims = model.dims.chain();
  for (int i = 0; i < kNumLayers; ++i) {
    Dense& layer = model.params.layers[i];
    layer.weight.resize(dims[i + 1], dims[i]);
    for (int r = 0; r < dims[i + 1]; ++r) {
      const auto values = read_values(dims[i]);
      for (int c = 0; c < dims[i]; ++c) layer.weight(r, c) = values[c];
    }
    const auto bias = read_values(dims[i + 1]);
    layer.bias = Eigen::Map<const VectorXd>(bias.data(), dims[i + 1]);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) throw FormatError(ctx() + ": unexpected trailing content");
  }
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_text(model));
}

Model load_model(const std::filesystem::path& path) {
  try {
    return model_from_text(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::uint64_t parameter_hash(const ParamSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const double* data, Eigen::Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Dense& l : params.layers) {
    feed(l.weight.data(), l.weight.size());
    feed(l.bias.data(), l.bias.size());
  }
  return h;
}

}  // namespace cdcnn

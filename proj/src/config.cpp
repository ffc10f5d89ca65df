#include "cdcnn/config.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "cdcnn/errors.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/textio.hpp"

namespace cdcnn {

void ExperimentConfig::apply_master_seed() {
  synth.seed = derive_seed(seed, "synth");
  train.seed = derive_seed(seed, "train");
  tracker.seed = derive_seed(seed, "tracker");
}

namespace {

struct Entry {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

bool parse_bool(std::string_view v, std::string_view ctx) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw FormatError(std::string(ctx) + ": expected a boolean, got '" + std::string(v) + "'");
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string occlusions_to_text(const std::vector<std::pair<int, int>>& windows) {
  std::string out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(windows[i].first) + "-" + std::to_string(windows[i].second);
  }
  return out;
}

std::vector<std::pair<int, int>> parse_occlusions(std::string_view v, std::string_view ctx) {
  std::vector<std::pair<int, int>> out;
  if (trim(v).empty()) return out;
  for (auto item : split(v, ',')) {
    const auto parts = split(trim(item), '-');
    if (parts.size() != 2) throw FormatError(std::string(ctx) + ": occlusion windows look like 10-20");
    out.emplace_back(static_cast<int>(parse_int(parts[0], ctx)), static_cast<int>(parse_int(parts[1], ctx)));
  }
  return out;
}

// Field binders keep the table below to one line per key.
template <typename Get>
Entry int_entry(Get field) {
  return {[field](ExperimentConfig& c, std::string_view v) {
            field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(parse_int(v, "value"));
          },
          [field](const ExperimentConfig& c) {
            return std::to_string(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Get>
Entry double_entry(Get field) {
  return {[field](ExperimentConfig& c, std::string_view v) { field(c) = parse_double(v, "value"); },
          [field](const ExperimentConfig& c) { return format_double(field(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
Entry bool_entry(Get field) {
  return {[field](ExperimentConfig& c, std::string_view v) { field(c) = parse_bool(v, "value"); },
          [field](const ExperimentConfig& c) {
            return std::string(field(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

template <typename Get>
Entry optimizer_entry(Get field) {
  return {[field](ExperimentConfig& c, std::string_view v) { field(c) = parse_optimizer(v); },
          [field](const ExperimentConfig& c) {
            return std::string(optimizer_name(field(const_cast<ExperimentConfig&>(c))));
          }};
}

const std::map<std::string, Entry>& registry() {
  using C = ExperimentConfig;
  static const std::map<std::string, Entry> table = [] {
    std::map<std::string, Entry> t;
    t["seed"] = {[](C& c, std::string_view v) { c.seed = static_cast<std::uint64_t>(parse_int(v, "value")); },
                 [](const C& c) { return std::to_string(c.seed); }};

    t["synth.name"] = {[](C& c, std::string_view v) { c.synth.name = std::string(v); },
                       [](const C& c) { return c.synth.name; }};
    t["synth.frames"] = int_entry([](C& c) -> int& { return c.synth.frames; });
    t["synth.frame_width"] = int_entry([](C& c) -> int& { return c.synth.frame_width; });
    t["synth.frame_height"] = int_entry([](C& c) -> int& { return c.synth.frame_height; });
    t["synth.channels"] = int_entry([](C& c) -> int& { return c.synth.channels; });
    t["synth.target_width"] = double_entry([](C& c) -> double& { return c.synth.target_width; });
    t["synth.target_height"] = double_entry([](C& c) -> double& { return c.synth.target_height; });
    t["synth.start_x"] = double_entry([](C& c) -> double& { return c.synth.start_x; });
    t["synth.start_y"] = double_entry([](C& c) -> double& { return c.synth.start_y; });
    t["synth.velocity_x"] = double_entry([](C& c) -> double& { return c.synth.velocity_x; });
    t["synth.velocity_y"] = double_entry([](C& c) -> double& { return c.synth.velocity_y; });
    t["synth.scale_rate"] = double_entry([](C& c) -> double& { return c.synth.scale_rate; });
    t["synth.occlusions"] = {
        [](C& c, std::string_view v) { c.synth.occlusions = parse_occlusions(v, "synth.occlusions"); },
        [](const C& c) { return occlusions_to_text(c.synth.occlusions); }};
    t["synth.distractors"] = int_entry([](C& c) -> int& { return c.synth.distractors; });
    t["synth.distractor_speed"] = double_entry([](C& c) -> double& { return c.synth.distractor_speed; });
    t["synth.appearance_drift"] = double_entry([](C& c) -> double& { return c.synth.appearance_drift; });
    t["synth.noise"] = double_entry([](C& c) -> double& { return c.synth.noise; });

    t["sampler.lo"] = double_entry([](C& c) -> double& { return c.sampler.lo; });
    t["sampler.hi"] = double_entry([](C& c) -> double& { return c.sampler.hi; });
    t["sampler.shift_max"] = int_entry([](C& c) -> int& { return c.sampler.shift_max; });
    t["sampler.m_p"] = int_entry([](C& c) -> int& { return c.sampler.m_p; });
    t["sampler.m_n"] = int_entry([](C& c) -> int& { return c.sampler.m_n; });
    t["sampler.sigma_xy"] = double_entry([](C& c) -> double& { return c.sampler.sigma_xy; });
    t["sampler.sigma_scale"] = double_entry([](C& c) -> double& { return c.sampler.sigma_scale; });
    t["sampler.neg_sigma_xy"] = double_entry([](C& c) -> double& { return c.sampler.neg_sigma_xy; });
    t["sampler.neg_sigma_scale"] = double_entry([](C& c) -> double& { return c.sampler.neg_sigma_scale; });
    t["sampler.update_pos_iou"] = double_entry([](C& c) -> double& { return c.sampler.update_pos_iou; });
    t["sampler.update_neg_iou"] = double_entry([](C& c) -> double& { return c.sampler.update_neg_iou; });
    t["sampler.update_m_p"] = int_entry([](C& c) -> int& { return c.sampler.update_m_p; });
    t["sampler.update_m_n"] = int_entry([](C& c) -> int& { return c.sampler.update_m_n; });
    t["sampler.max_rejections"] = int_entry([](C& c) -> int& { return c.sampler.max_rejections; });

    t["net.patch_side"] = int_entry([](C& c) -> int& { return c.net.patch_side; });
    t["net.channels"] = int_entry([](C& c) -> int& { return c.net.channels; });
    t["net.hidden1"] = int_entry([](C& c) -> int& { return c.net.hidden1; });
    t["net.feature"] = int_entry([](C& c) -> int& { return c.net.feature; });
    t["net.hidden3"] = int_entry([](C& c) -> int& { return c.net.hidden3; });
    t["net.hidden4"] = int_entry([](C& c) -> int& { return c.net.hidden4; });
    t["net.activation"] = {[](C& c, std::string_view v) { c.net.activation = parse_activation(v); },
                           [](const C& c) { return std::string(activation_name(c.net.activation)); }};

    t["loss.lambda"] = double_entry([](C& c) -> double& { return c.loss.lambda; });
    t["loss.mu"] = double_entry([](C& c) -> double& { return c.loss.mu; });
    t["loss.beta"] = double_entry([](C& c) -> double& { return c.loss.beta; });
    t["loss.p_floor"] = double_entry([](C& c) -> double& { return c.loss.p_floor; });

    t["train.iterations"] = int_entry([](C& c) -> int& { return c.train.iterations; });
    t["train.batch_size"] = int_entry([](C& c) -> int& { return c.train.batch_size; });
    t["train.optimizer"] = optimizer_entry([](C& c) -> OptimizerKind& { return c.train.optimizer.kind; });
    t["train.learning_rate"] = double_entry([](C& c) -> double& { return c.train.optimizer.learning_rate; });
    t["train.adam_beta1"] = double_entry([](C& c) -> double& { return c.train.optimizer.beta1; });
    t["train.adam_beta2"] = double_entry([](C& c) -> double& { return c.train.optimizer.beta2; });
    t["train.adam_epsilon"] = double_entry([](C& c) -> double& { return c.train.optimizer.epsilon; });
    t["train.variant"] = {[](C& c, std::string_view v) { c.train.variant = parse_variant(v); },
                          [](const C& c) { return std::string(variant_name(c.train.variant)); }};
    t["train.skip_occluded"] = bool_entry([](C& c) -> bool& { return c.train.skip_occluded; });
    t["train.finetune_iterations"] = int_entry([](C& c) -> int& { return c.train.finetune_iterations; });
    t["train.finetune_optimizer"] =
        optimizer_entry([](C& c) -> OptimizerKind& { return c.train.finetune_optimizer.kind; });
    t["train.finetune_learning_rate"] =
        double_entry([](C& c) -> double& { return c.train.finetune_optimizer.learning_rate; });
    t["train.update_steps"] = int_entry([](C& c) -> int& { return c.train.update_steps; });
    t["train.update_optimizer"] = optimizer_entry([](C& c) -> OptimizerKind& { return c.train.update_optimizer.kind; });
    t["train.update_learning_rate"] =
        double_entry([](C& c) -> double& { return c.train.update_optimizer.learning_rate; });
    t["train.classifier_only_online"] = bool_entry([](C& c) -> bool& { return c.train.classifier_only_online; });

    t["tracker.candidates"] = int_entry([](C& c) -> int& { return c.tracker.candidates; });
    t["tracker.top_k"] = int_entry([](C& c) -> int& { return c.tracker.top_k; });
    t["tracker.update_period"] = int_entry([](C& c) -> int& { return c.tracker.update_period; });
    t["tracker.update_score_threshold"] =
        double_entry([](C& c) -> double& { return c.tracker.update_score_threshold; });

    t["gradcheck.dims"] = {
        [](C& c, std::string_view v) {
          const auto parts = split(v, ',');
          if (parts.size() != 6) throw FormatError("gradcheck.dims needs 6 comma-separated sizes");
          int d[6];
          for (int i = 0; i < 6; ++i) d[i] = static_cast<int>(parse_int(parts[i], "gradcheck.dims"));
          c.gradcheck.dims = NetDims{d[0], d[1], d[2], d[3], d[4], d[5]};
        },
        [](const C& c) {
          const auto ch = c.gradcheck.dims.chain();
          return join_ints(std::vector<int>(ch.begin(), ch.end()));
        }};
    t["gradcheck.activation"] = {[](C& c, std::string_view v) { c.gradcheck.activation = parse_activation(v); },
                                 [](const C& c) { return std::string(activation_name(c.gradcheck.activation)); }};
    t["gradcheck.models"] = int_entry([](C& c) -> int& { return c.gradcheck.models; });
    t["gradcheck.triplets"] = int_entry([](C& c) -> int& { return c.gradcheck.triplets; });
    t["gradcheck.h"] = double_entry([](C& c) -> double& { return c.gradcheck.h; });
    t["gradcheck.tol"] = double_entry([](C& c) -> double& { return c.gradcheck.tol; });

    t["bound.n"] = int_entry([](C& c) -> int& { return c.bound.params.n; });
    t["bound.m"] = int_entry([](C& c) -> int& { return c.bound.params.m; });
    t["bound.delta"] = double_entry([](C& c) -> double& { return c.bound.params.delta; });
    t["bound.K"] = double_entry([](C& c) -> double& { return c.bound.params.K; });
    t["bound.dt"] = double_entry([](C& c) -> double& { return c.bound.params.dt; });
    t["bound.max_var"] = double_entry([](C& c) -> double& { return c.bound.params.max_var; });
    t["bound.trials"] = int_entry([](C& c) -> std::size_t& { return c.bound.trials; });
    t["bound.bernoulli_p"] = double_entry([](C& c) -> double& { return c.bound.bernoulli_p; });
    t["bound.adversarial_offset"] = double_entry([](C& c) -> double& { return c.bound.adversarial_offset; });
    t["bound.sweep_m"] = {[](C& c, std::string_view v) {
                            c.bound.sweep_m.clear();
                            if (trim(v).empty()) return;
                            for (auto p : split(v, ',')) {
                              c.bound.sweep_m.push_back(static_cast<int>(parse_int(p, "bound.sweep_m")));
                            }
                          },
                          [](const C& c) { return join_ints(c.bound.sweep_m); }};

    t["ablate.suite"] = {[](C& c, std::string_view v) {
                           if (v != "easy" && v != "distractor" && v != "config") {
                             throw FormatError("ablate.suite must be easy, distractor or config");
                           }
                           c.ablate.suite = std::string(v);
                         },
                         [](const C& c) { return c.ablate.suite; }};
    t["ablate.seeds"] = int_entry([](C& c) -> int& { return c.ablate.seeds; });
    t["ablate.train_sequences"] = int_entry([](C& c) -> int& { return c.ablate.train_sequences; });
    return t;
  }();
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    const std::string ctx = "config line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw InvalidConfig(ctx + ": expected key=value");
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (!registry().contains(key)) throw InvalidConfig(ctx + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw InvalidConfig(ctx + ": duplicate key '" + key + "'");
    try {
      registry().at(key).set(config, value);
    } catch (const ValidationError& e) {
      throw InvalidConfig(ctx + " (" + key + "): " + e.what());
    }
  }
  config.apply_master_seed();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_text_file(path));
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(path.string() + ": " + e.what());
  }
}

std::string config_to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, entry] : registry()) out += key + "=" + entry.get(config) + "\n";
  return out;
}

}  // namespace cdcnn

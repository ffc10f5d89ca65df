#include "cdcnn/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cdcnn/errors.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/textio.hpp"

namespace fs = std::filesystem;

namespace cdcnn {

namespace {

constexpr const char* kLogEnv = "CDCNN_LOG_LEVEL";

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string log_level;
};

void setup_logging(const std::string& flag_level) {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("cdcnn");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  std::string level = "info";
  if (const char* env = std::getenv(kLogEnv); env != nullptr && *env != '\0') level = env;
  if (!flag_level.empty()) level = flag_level;
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off") throw InvalidConfig("unknown log level '" + level + "'");
  spdlog::set_level(parsed);
}

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig config = opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  config.apply_master_seed();
  return config;
}

fs::path prepare_out(const CommonOptions& opts) {
  const fs::path out(opts.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

Model fresh_model(const ExperimentConfig& config) {
  return init_model(config.net.dims(), derive_seed(config.seed, "init"), config.net.activation);
}

SynthSpec spec_for(const std::string& preset, const ExperimentConfig& config, std::uint64_t seed) {
  if (preset == "easy") return easy_spec(seed);
  if (preset == "distractor") return distractor_spec(seed);
  if (preset == "config") {
    SynthSpec spec = config.synth;
    spec.seed = seed;
    return spec;
  }
  throw InvalidConfig("unknown preset '" + preset + "' (easy, distractor, config)");
}

// ---------------------------------------------------------------------------
// Subcommands

int run_gen(const CommonOptions& opts, const std::string& preset, int count) {
  const ExperimentConfig config = resolve_config(opts);
  const fs::path out = prepare_out(opts);
  if (count < 1) throw InvalidConfig("gen: --count must be >= 1");
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = count == 1 ? config.synth.seed : derive_seed(config.synth.seed, static_cast<std::uint64_t>(i));
    SynthSpec spec = spec_for(preset, config, seed);
    if (preset != "config") spec.name = preset;
    if (count > 1) spec.name += "-" + std::to_string(i);
    const Sequence seq = generate_sequence(spec);
    save_sequence(seq, out / seq.name);
    std::cout << (out / seq.name).string() << "\n";
  }
  return 0;
}

int run_train(const CommonOptions& opts, const std::vector<std::string>& sequence_dirs, bool one_based) {
  const ExperimentConfig config = resolve_config(opts);
  if (sequence_dirs.empty()) throw InvalidInput("train: at least one sequence directory is required");
  std::vector<Sequence> sequences;
  for (const auto& dir : sequence_dirs) sequences.push_back(load_sequence(dir, one_based));
  const fs::path out = prepare_out(opts);
  const TrainResult result =
      train_offline(sequences, fresh_model(config), config.train, config.sampler, config.loss);
  save_model(result.model, out / "model.txt");
  write_text_file(out / "loss.csv", loss_trace_csv(result.trace));
  if (!result.trace.empty()) {
    spdlog::info("trained {} iterations ({}): loss {} -> {}", result.trace.size(), variant_name(config.train.variant),
                 result.trace.front().loss.total, result.trace.back().loss.total);
  }
  return 0;
}

int run_track(const CommonOptions& opts, const std::string& model_path, const std::string& sequence_dir,
              bool one_based) {
  const ExperimentConfig config = resolve_config(opts);
  const Model model = load_model(model_path);
  const Sequence seq = load_sequence(sequence_dir, one_based);
  const fs::path out = prepare_out(opts);
  const TrackResult result =
      track_sequence(model, seq, config.tracker, config.train, config.sampler, config.loss);
  write_text_file(out / (seq.name + "_results.csv"), track_result_csv(result));
  write_text_file(out / (seq.name + "_finetune_loss.csv"), loss_trace_csv(result.finetune_trace));
  const SequenceEval ev = evaluate_track(result.records, seq, "cdcnn");
  spdlog::info("{}: prec@20 {} auc {}", seq.name, ev.prec20, ev.auc);
  return 0;
}

int run_eval(const CommonOptions& opts, const std::vector<std::string>& results, const std::vector<std::string>& names,
             const std::string& sequence_dir, bool one_based) {
  resolve_config(opts);
  if (results.empty()) throw InvalidInput("eval: at least one --results file is required");
  if (!names.empty() && names.size() != results.size()) {
    throw InvalidInput("eval: --name must be given once per --results file");
  }
  const Sequence seq = load_sequence(sequence_dir, one_based);
  const fs::path out = prepare_out(opts);
  std::vector<SequenceEval> rows;
  std::vector<Curve> precision;
  std::vector<Curve> success;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string name = names.empty() ? fs::path(results[i]).stem().string() : names[i];
    const auto records = parse_track_result_csv(read_text_file(results[i]));
    SequenceEval ev = evaluate_track(records, seq, name);
    ev.precision.name = name;
    ev.success.name = name;
    precision.push_back(ev.precision);
    success.push_back(ev.success);
    rows.push_back(std::move(ev));
  }
  emit_plots(precision, out, seq.name + "_precision", "Precision plot: " + seq.name, "location error threshold (px)",
             "precision");
  emit_plots(success, out, seq.name + "_success", "Success plot: " + seq.name, "overlap threshold", "success rate");
  const std::string table = score_table_csv(rows);
  write_text_file(out / (seq.name + "_scores.csv"), table);
  std::cout << table;
  return 0;
}

std::vector<Triplet> random_triplets(int count, int side, Rng& rng) {
  std::normal_distribution<double> pixel(0.0, 0.3);
  auto make = [&] {
    Patch p;
    p.side = side;
    p.pixels.resize(static_cast<std::size_t>(side) * side);
    for (auto& v : p.pixels) v = pixel(rng);
    return p;
  };
  std::vector<Triplet> out;
  for (int i = 0; i < count; ++i) out.push_back(Triplet{make(), make(), make()});
  return out;
}

struct NamedMask {
  const char* name;
  TermMask mask;
};

constexpr NamedMask kGradcheckMasks[] = {
    {"joint", {true, true, true}},
    {"pair", {true, false, false}},
    {"discrimination", {false, true, false}},
    {"classification", {false, false, true}},
};

int run_gradcheck(const CommonOptions& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const GradcheckConfig& gc = config.gradcheck;
  validate(gc.dims);
  const int side = static_cast<int>(std::lround(std::sqrt(gc.dims.input)));
  if (side * side != gc.dims.input) throw InvalidConfig("gradcheck.dims: input size must be a perfect square");
  if (gc.models < 1 || gc.triplets < 1) throw InvalidConfig("gradcheck: models and triplets must be >= 1");
  const fs::path out = prepare_out(opts);

  std::string csv = "model,terms,checked,skipped_kinks,max_rel_error,pass\n";
  bool all_passed = true;
  for (int i = 0; i < gc.models; ++i) {
    const std::uint64_t seed = derive_seed(derive_seed(config.seed, "gradcheck"), static_cast<std::uint64_t>(i));
    const Model model = init_model(gc.dims, seed, gc.activation);
    Rng rng(derive_seed(seed, "data"));
    const auto batch = random_triplets(gc.triplets, side, rng);
    for (const auto& [name, mask] : kGradcheckMasks) {
      const GradCheckReport r = finite_diff_check(model, batch, config.loss, mask, gc.h, gc.tol);
      all_passed = all_passed && r.passed;
      csv += std::to_string(i) + "," + name + "," + std::to_string(r.checked) + "," + std::to_string(r.skipped_kinks) +
             "," + format_double(r.max_rel_error) + "," + (r.passed ? "1" : "0") + "\n";
    }
  }
  write_text_file(out / "gradcheck.csv", csv);
  std::cout << csv;
  if (!all_passed) {
    spdlog::error("gradient check failed");
    return 2;
  }
  return 0;
}

int run_verify_bound(const CommonOptions& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const BoundConfig& bc = config.bound;
  const fs::path out = prepare_out(opts);
  const std::uint64_t base = derive_seed(config.seed, "bound");

  std::vector<bound::BoundParams> param_sets{bc.params};
  for (int m : bc.sweep_m) {
    bound::BoundParams p = bc.params;
    p.m = m;
    param_sets.push_back(p);
  }

  std::vector<bound::ChebyshevReport> cheb;
  std::vector<bound::ErrorBoundReport> err;
  for (std::size_t s = 0; s < param_sets.size(); ++s) {
    const auto& p = param_sets[s];
    bound::validate(p);
    const std::vector<double> variances(static_cast<std::size_t>(p.n), p.max_var);
    for (auto kind : {bound::Distribution::gaussian, bound::Distribution::uniform,
                      bound::Distribution::shifted_bernoulli}) {
      bound::DistributionSpec dist{kind, variances, bc.bernoulli_p};
      const auto tag = derive_seed(base, std::string("cheb:") + std::string(bound::distribution_name(kind)) + ":" +
                                             std::to_string(p.m));
      cheb.push_back(bound::verify_chebyshev(p, dist, bc.trials, tag));
    }
    for (auto pred : {bound::Predictor::truth, bound::Predictor::sample_mean, bound::Predictor::adversarial}) {
      bound::ScenarioSpec scenario;
      scenario.noise = bound::DistributionSpec{bound::Distribution::gaussian, variances, bc.bernoulli_p};
      scenario.predictor = pred;
      scenario.adversarial_offset = bc.adversarial_offset;
      const auto tag = derive_seed(base, std::string("err:") + std::string(bound::predictor_name(pred)) + ":" +
                                             std::to_string(p.m));
      err.push_back(bound::verify_error_bound(p, scenario, bc.trials, tag));
    }
  }
  const std::string csv = bound::report_csv(cheb, err);
  write_text_file(out / "bound.csv", csv);
  std::cout << csv;
  bool passed = true;
  for (const auto& r : cheb) passed = passed && r.passed;
  for (const auto& r : err) passed = passed && r.passed;
  if (!passed) {
    spdlog::error("bound verification failed");
    return 2;
  }
  return 0;
}

int run_ablate(const CommonOptions& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const fs::path out = prepare_out(opts);
  const AblationResult result = run_ablation(config);
  write_text_file(out / "ablation.csv", ablation_csv(result));
  const std::string summary = ablation_summary_csv(result);
  write_text_file(out / "ablation_summary.csv", summary);
  std::cout << summary;
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ablation

AblationResult run_ablation(const ExperimentConfig& config) {
  const AblateConfig& ac = config.ablate;
  if (ac.seeds < 1 || ac.train_sequences < 1) throw InvalidConfig("ablate: seeds and train_sequences must be >= 1");
  const std::uint64_t base = derive_seed(config.seed, "ablate");
  const std::string preset = ac.suite;
  const std::size_t n_variants = std::size(kAllVariants);

  // Each seed is an independent replicate: its own corpus, initial weights,
  // training stream and test sequence, shared by every variant.
  std::vector<std::vector<SequenceEval>> per_variant(n_variants);
  for (int i = 0; i < ac.seeds; ++i) {
    const std::uint64_t rep = derive_seed(base, static_cast<std::uint64_t>(i));
    std::vector<Sequence> corpus;
    for (int j = 0; j < ac.train_sequences; ++j) {
      SynthSpec spec = spec_for(preset, config, derive_seed(derive_seed(rep, "corpus"), static_cast<std::uint64_t>(j)));
      spec.name = "train-" + std::to_string(i) + "-" + std::to_string(j);
      corpus.push_back(generate_sequence(spec));
    }
    SynthSpec test_spec = spec_for(preset, config, derive_seed(rep, "test"));
    test_spec.name = preset + "-" + std::to_string(i);
    const Sequence test = generate_sequence(test_spec);
    const Model initial = init_model(config.net.dims(), derive_seed(rep, "init"), config.net.activation);

    for (std::size_t v = 0; v < n_variants; ++v) {
      const std::string name(variant_name(kAllVariants[v]));
      TrainConfig train = config.train;
      train.variant = kAllVariants[v];
      train.seed = derive_seed(rep, "train");
      const TrainResult trained = train_offline(corpus, initial, train, config.sampler, config.loss);
      TrackerConfig tracker = config.tracker;
      tracker.seed = derive_seed(rep, "tracker");
      const TrackResult tr = track_sequence(trained.model, test, tracker, train, config.sampler, config.loss);
      SequenceEval ev = evaluate_track(tr.records, test, name);
      spdlog::info("ablate {} {}: prec@20 {} auc {}", name, test.name, ev.prec20, ev.auc);
      per_variant[v].push_back(std::move(ev));
    }
  }

  AblationResult result;
  for (std::size_t v = 0; v < n_variants; ++v) {
    double sum_prec = 0.0;
    double sum_auc = 0.0;
    for (auto& ev : per_variant[v]) {
      sum_prec += ev.prec20;
      sum_auc += ev.auc;
      result.rows.push_back(std::move(ev));
    }
    result.variants.emplace_back(variant_name(kAllVariants[v]));
    result.mean_prec20.push_back(sum_prec / static_cast<double>(ac.seeds));
    result.mean_auc.push_back(sum_auc / static_cast<double>(ac.seeds));
  }
  return result;
}

std::string ablation_csv(const AblationResult& result) {
  std::string out = "variant,sequence,prec@20,auc\n";
  for (const auto& r : result.rows) {
    out += r.tracker + "," + r.sequence + "," + format_double(r.prec20) + "," + format_double(r.auc) + "\n";
  }
  for (std::size_t i = 0; i < result.variants.size(); ++i) {
    out += result.variants[i] + ",mean," + format_double(result.mean_prec20[i]) + "," +
           format_double(result.mean_auc[i]) + "\n";
  }
  return out;
}

std::string ablation_summary_csv(const AblationResult& result) {
  std::string out = "variant,mean_prec@20,mean_auc,sequences\n";
  const std::size_t per_variant = result.variants.empty() ? 0 : result.rows.size() / result.variants.size();
  for (std::size_t i = 0; i < result.variants.size(); ++i) {
    out += result.variants[i] + "," + format_double(result.mean_prec20[i]) + "," + format_double(result.mean_auc[i]) +
           "," + std::to_string(per_variant) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Continuity-discrimination feature learning tracker", "cdcnn"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "key=value experiment file")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", opts.seed, "master seed (overrides the config file)");
    sub->add_option("--log-level", opts.log_level, std::string("trace|debug|info|warn|error|off (env ") + kLogEnv + ")");
  };

  std::string preset = "config";
  int count = 1;
  auto* gen = app.add_subcommand("gen", "generate a synthetic sequence directory");
  add_common(gen);
  gen->add_option("--preset", preset, "easy | distractor | config")->capture_default_str();
  gen->add_option("--count", count, "number of sequences (seeds derived per index)")->capture_default_str();

  std::vector<std::string> sequence_dirs;
  bool one_based = false;
  auto* train = app.add_subcommand("train", "offline training on sequence directories");
  add_common(train);
  train->add_option("sequences", sequence_dirs, "sequence directories")->required();
  train->add_flag("--one-based", one_based, "ground truth uses 1-based pixel coordinates");

  std::string model_path;
  std::string sequence_dir;
  auto* track = app.add_subcommand("track", "track a sequence with a trained model");
  add_common(track);
  track->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  track->add_option("--sequence", sequence_dir, "sequence directory")->required()->check(CLI::ExistingDirectory);
  track->add_flag("--one-based", one_based, "ground truth uses 1-based pixel coordinates");

  std::vector<std::string> results;
  std::vector<std::string> names;
  auto* eval = app.add_subcommand("eval", "precision/success curves and scores");
  add_common(eval);
  eval->add_option("--results", results, "tracking results CSV (repeatable)")->required();
  eval->add_option("--name", names, "tracker name per results file");
  eval->add_option("--sequence", sequence_dir, "sequence directory")->required()->check(CLI::ExistingDirectory);
  eval->add_flag("--one-based", one_based, "ground truth uses 1-based pixel coordinates");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient report");
  add_common(gradcheck);
  auto* verify = app.add_subcommand("verify-bound", "Monte Carlo check of the appearance error bound");
  add_common(verify);
  auto* ablate = app.add_subcommand("ablate", "train and track every loss variant");
  add_common(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    setup_logging(opts.log_level);
    if (gen->parsed()) return run_gen(opts, preset, count);
    if (train->parsed()) return run_train(opts, sequence_dirs, one_based);
    if (track->parsed()) return run_track(opts, model_path, sequence_dir, one_based);
    if (eval->parsed()) return run_eval(opts, results, names, sequence_dir, one_based);
    if (gradcheck->parsed()) return run_gradcheck(opts);
    if (verify->parsed()) return run_verify_bound(opts);
    if (ablate->parsed()) return run_ablate(opts);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << app.help();
  return 1;
}

int dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cdcnn

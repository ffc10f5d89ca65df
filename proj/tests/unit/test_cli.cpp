#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "cdcnn/cli.hpp"
#include "cdcnn/config.hpp"
#include "cdcnn/dataset.hpp"
#include "cdcnn/textio.hpp"
#include "cdcnn/tracker.hpp"
#include "test_util.hpp"

using namespace cdcnn;
namespace fs = std::filesystem;

namespace {

const char* kTiny =
    "synth.frames=8\n"
    "synth.frame_width=48\n"
    "synth.frame_height=48\n"
    "synth.target_width=12\n"
    "synth.target_height=12\n"
    "synth.start_x=10\n"
    "synth.start_y=12\n"
    "synth.velocity_x=1\n"
    "synth.velocity_y=0.5\n"
    "net.patch_side=8\n"
    "net.hidden1=16\n"
    "net.feature=8\n"
    "net.hidden3=8\n"
    "net.hidden4=4\n"
    "sampler.m_p=8\n"
    "sampler.m_n=8\n"
    "train.iterations=5\n"
    "train.batch_size=4\n"
    "train.finetune_iterations=3\n"
    "train.update_steps=2\n"
    "tracker.candidates=20\n"
    "ablate.suite=config\n"
    "ablate.seeds=2\n"
    "ablate.train_sequences=1\n";

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "cdcnn");
  args.push_back("--log-level");
  args.push_back("off");
  return dispatch(args);
}

fs::path tiny_config(const fs::path& dir) {
  write_text_file(dir / "tiny.cfg", kTiny);
  return dir / "tiny.cfg";
}

std::string read_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, root).string() + "\n" + read_text_file(f);
  return all;
}

}  // namespace

TEST_CASE("usage errors exit with 1, help with 0") {
  CHECK(dispatch(std::vector<std::string>{"cdcnn"}) == 1);
  CHECK(dispatch(std::vector<std::string>{"cdcnn", "fly"}) == 1);
  CHECK(dispatch(std::vector<std::string>{"cdcnn", "gen", "--bogus"}) == 1);
  CHECK(dispatch(std::vector<std::string>{"cdcnn", "--help"}) == 0);
}

TEST_CASE("a bad config file exits with 1") {
  const auto dir = testutil::scratch_dir("cli_badcfg");
  write_text_file(dir / "bad.cfg", "loss.lambda=ten\n");
  CHECK(run({"gen", "--config", (dir / "bad.cfg").string(), "--out", (dir / "o").string()}) == 1);
  CHECK(run({"gen", "--config", (dir / "missing.cfg").string()}) == 1);
  CHECK(run({"gen", "--preset", "hard", "--out", (dir / "o").string()}) == 1);
}

TEST_CASE("gen is reproducible") {
  const auto dir = testutil::scratch_dir("cli_gen");
  const auto cfg = tiny_config(dir).string();
  REQUIRE(run({"gen", "--preset", "config", "--config", cfg, "--seed", "3", "--count", "2", "--out",
               (dir / "a").string()}) == 0);
  REQUIRE(run({"gen", "--preset", "config", "--config", cfg, "--seed", "3", "--count", "2", "--out",
               (dir / "b").string()}) == 0);
  CHECK(fs::exists(dir / "a" / "synth-0" / "groundtruth_rect.txt"));
  CHECK(fs::exists(dir / "a" / "synth-1" / "img" / "000008.pgm"));
  CHECK(read_tree(dir / "a") == read_tree(dir / "b"));
}

TEST_CASE("eval of a perfect result file") {
  const auto dir = testutil::scratch_dir("cli_eval");
  const auto cfg = tiny_config(dir).string();
  REQUIRE(run({"gen", "--preset", "config", "--config", cfg, "--out", (dir / "seqs").string()}) == 0);
  const Sequence seq = load_sequence(dir / "seqs" / "synth", false);
  TrackResult perfect;
  perfect.sequence = seq.name;
  for (int t = 2; t <= seq.length(); ++t) perfect.records.push_back(TrackRecord{t, seq.groundtruth[t - 1], 1.0});
  write_text_file(dir / "perfect.csv", track_result_csv(perfect));
  REQUIRE(run({"eval", "--results", (dir / "perfect.csv").string(), "--name", "oracle", "--sequence",
               (dir / "seqs" / "synth").string(), "--out", (dir / "ev").string()}) == 0);
  const std::string scores = read_text_file(dir / "ev" / "synth_scores.csv");
  CHECK(scores.rfind("tracker,sequence,prec@20,auc\noracle,synth,1,", 0) == 0);
  const double auc = std::stod(scores.substr(scores.rfind(',') + 1));
  CHECK(auc == doctest::Approx(20.0 / 21.0).epsilon(1e-12));
  CHECK(fs::exists(dir / "ev" / "synth_precision.svg"));
  CHECK(fs::exists(dir / "ev" / "synth_success_oracle.csv"));
}

TEST_CASE("train, track and ablate on a tiny configuration") {
  const auto dir = testutil::scratch_dir("cli_pipeline");
  const auto cfg = tiny_config(dir).string();
  REQUIRE(run({"gen", "--preset", "config", "--config", cfg, "--out", (dir / "seqs").string()}) == 0);
  const auto seq = (dir / "seqs" / "synth").string();
  REQUIRE(run({"train", seq, "--config", cfg, "--out", (dir / "model").string()}) == 0);
  CHECK(fs::exists(dir / "model" / "model.txt"));
  const std::string loss = read_text_file(dir / "model" / "loss.csv");
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 6);
  REQUIRE(run({"track", "--config", cfg, "--model", (dir / "model" / "model.txt").string(), "--sequence", seq,
               "--out", (dir / "track").string()}) == 0);
  CHECK(parse_track_result_csv(read_text_file(dir / "track" / "synth_results.csv")).size() == 7);

  REQUIRE(run({"ablate", "--config", cfg, "--out", (dir / "ablate").string()}) == 0);
  const std::string summary = read_text_file(dir / "ablate" / "ablation_summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 6);
  for (const char* v : {"full,", "wo-C-learning,", "wo-Dloss,", "SlossOnly,", "tarspec,"}) {
    CHECK(summary.find(v) != std::string::npos);
  }
  const std::string rows = read_text_file(dir / "ablate" / "ablation.csv");
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 1 + 5 * 2 + 5);
}

TEST_CASE("gradcheck and verify-bound write their reports") {
  const auto dir = testutil::scratch_dir("cli_reports");
  write_text_file(dir / "small.cfg",
                  "gradcheck.models=2\ngradcheck.dims=16,8,4,4,4,2\nbound.trials=500\nbound.sweep_m=200\n");
  const auto cfg = (dir / "small.cfg").string();
  CHECK(run({"gradcheck", "--config", cfg, "--out", dir.string()}) == 0);
  const std::string g = read_text_file(dir / "gradcheck.csv");
  CHECK(g.rfind("model,terms,checked,skipped_kinks,max_rel_error,pass\n", 0) == 0);
  CHECK(std::count(g.begin(), g.end(), '\n') == 1 + 2 * 4);
  CHECK(run({"verify-bound", "--config", cfg, "--out", dir.string()}) == 0);
  const std::string b = read_text_file(dir / "bound.csv");
  CHECK(b.rfind("trial_param_set,rho,violation_rate,satisfaction_rate,pass\n", 0) == 0);
  CHECK(b.find(",false") == std::string::npos);
}

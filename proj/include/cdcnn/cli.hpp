#ifndef CDCNN_CLI_HPP_
#define CDCNN_CLI_HPP_

#include <string>
#include <vector>

#include "cdcnn/config.hpp"
#include "cdcnn/eval.hpp"

namespace cdcnn {

// Exit codes: 0 success, 1 validation failure or bad usage, 2 internal error.
int dispatch(int argc, const char* const* argv);
// Same, with args[0] standing in for the program name.
int dispatch(const std::vector<std::string>& args);

struct AblationResult {
  std::vector<SequenceEval> rows;  // one per (variant, test sequence)
  std::vector<std::string> variants;
  std::vector<double> mean_prec20;
  std::vector<double> mean_auc;
};

// One replicate per seed: every variant is trained on the replicate's corpus
// from the replicate's initial weights and tracks its test sequence.
AblationResult run_ablation(const ExperimentConfig& config);

// "variant,sequence,prec@20,auc" rows followed by one "variant,mean,..." row per variant.
std::string ablation_csv(const AblationResult& result);
// "variant,mean_prec@20,mean_auc,sequences".
std::string ablation_summary_csv(const AblationResult& result);

}  // namespace cdcnn

#endif  // CDCNN_CLI_HPP_

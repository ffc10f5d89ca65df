#ifndef CDCNN_EVAL_HPP_
#define CDCNN_EVAL_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdcnn/dataset.hpp"
#include "cdcnn/geometry.hpp"
#include "cdcnn/tracker.hpp"

namespace cdcnn {

struct Curve {
  std::string name;
  std::vector<double> thresholds;
  std::vector<double> values;  // fraction of frames in [0,1]
};

std::vector<double> precision_thresholds();  // 0, 1, ..., 50 px
std::vector<double> success_thresholds();    // 0, 0.05, ..., 1

// Fraction of frames whose centre error is <= tau.
Curve precision_curve(std::span<const BBox> results, std::span<const BBox> groundtruth,
                      const std::vector<double>& thresholds = precision_thresholds());
// Fraction of frames whose IoU is strictly > tau.
Curve success_curve(std::span<const BBox> results, std::span<const BBox> groundtruth,
                    const std::vector<double>& thresholds = success_thresholds());

// Mean of the curve values over its grid.
double auc(const Curve& curve);
// Value at an exact grid threshold; throws InvalidInput if absent.
double value_at(const Curve& curve, double threshold);

// Point-wise mean of curves sharing one grid.
Curve mean_curve(std::span<const Curve> curves, std::string name);

struct SequenceEval {
  std::string tracker;
  std::string sequence;
  Curve precision;
  Curve success;
  double prec20 = 0.0;
  double auc = 0.0;
};

// Matches records to ground truth by frame number; frame 1 is excluded.
SequenceEval evaluate_track(std::span<const TrackRecord> records, const Sequence& sequence,
                            const std::string& tracker);

std::string curve_csv(const Curve& curve);
Curve parse_curve_csv(const std::string& text, std::string name);
std::string svg_plot(std::span<const Curve> curves, const std::string& title, const std::string& x_label,
                     const std::string& y_label);

// Writes <dir>/<stem>_<curve name>.csv for each curve and <dir>/<stem>.svg.
void emit_plots(std::span<const Curve> curves, const std::filesystem::path& dir, const std::string& stem,
                const std::string& title, const std::string& x_label, const std::string& y_label);

// "tracker,sequence,prec@20,auc".
std::string score_table_csv(std::span<const SequenceEval> rows);

}  // namespace cdcnn

#endif  // CDCNN_EVAL_HPP_

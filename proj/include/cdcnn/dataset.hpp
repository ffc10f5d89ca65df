#ifndef CDCNN_DATASET_HPP_
#define CDCNN_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cdcnn/geometry.hpp"
#include "cdcnn/image.hpp"

namespace cdcnn {

struct Sequence {
  std::string name;
  std::vector<Frame> frames;
  std::vector<BBox> groundtruth;  // one per frame
  std::vector<bool> occluded;     // one per frame; all false for ingested OTB data

  std::size_t length() const { return frames.size(); }
  bool operator==(const Sequence& other) const = default;
};

// Throws InvalidInput when the per-frame vectors disagree in length or a
// ground-truth box is degenerate.
void validate_sequence(const Sequence& seq);

// Parameters of a synthetic sequence. Frame numbers in occlusion windows are
// 1-based and inclusive, like OTB frame numbering.
struct SynthSpec {
  std::string name = "synth";
  int frames = 100;
  int frame_width = 128;
  int frame_height = 128;
  int channels = 1;
  double target_width = 24.0;
  double target_height = 24.0;
  double start_x = 20.0;
  double start_y = 40.0;
  double velocity_x = 0.0;   // px/frame, applied to the box centre
  double velocity_y = 0.0;
  double scale_rate = 1.0;   // per-frame multiplicative size change
  std::vector<std::pair<int, int>> occlusions;
  int distractors = 0;
  double distractor_speed = 1.5;
  double appearance_drift = 0.0;  // per-frame random-walk std of texture cells, in [0,1] of full range
  double noise = 2.0;             // per-pixel Gaussian noise std, intensity units
  std::uint64_t seed = 1;
};

// Exact kinematics of the target in 0-based frame k.
BBox synth_box_at(const SynthSpec& spec, int k);

// Throws InvalidConfig if any frame of the trajectory leaves the frame.
void validate_synth_spec(const SynthSpec& spec);

Sequence generate_sequence(const SynthSpec& spec);

// Presets used by the acceptance suite and the ablate command.
SynthSpec easy_spec(std::uint64_t seed);
SynthSpec distractor_spec(std::uint64_t seed);

// Layout: <dir>/img/%06d.pgm|.ppm, <dir>/groundtruth_rect.txt ("x,y,w,h" per
// line) and, when any frame is occluded, <dir>/occlusion.txt (0/1 per line).
void save_sequence(const Sequence& seq, const std::filesystem::path& dir);
Sequence load_sequence(const std::filesystem::path& dir, bool one_based);

// Binary PGM (P5) / PPM (P6), maxval 255.
void write_pnm(const Frame& frame, const std::filesystem::path& path);
Frame read_pnm(const std::filesystem::path& path);

std::vector<BBox> parse_groundtruth(const std::string& text, bool one_based);

}  // namespace cdcnn

#endif  // CDCNN_DATASET_HPP_

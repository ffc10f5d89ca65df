#ifndef CDCNN_TEST_UTIL_HPP_
#define CDCNN_TEST_UTIL_HPP_

#include <filesystem>
#include <random>
#include <string>

#include "cdcnn/geometry.hpp"
#include "cdcnn/image.hpp"

namespace testutil {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cdcnn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline cdcnn::Frame noise_frame(int w, int h, unsigned seed) {
  cdcnn::Frame f(w, h, 1, 1);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(px(rng));
  return f;
}

inline cdcnn::Patch random_patch(int side, std::mt19937_64& rng, double scale = 0.3) {
  std::normal_distribution<double> d(0.0, scale);
  cdcnn::Patch p;
  p.side = side;
  p.pixels.resize(static_cast<std::size_t>(side) * side);
  for (auto& v : p.pixels) v = d(rng);
  return p;
}

}  // namespace testutil

#endif  // CDCNN_TEST_UTIL_HPP_

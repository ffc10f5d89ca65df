#ifndef CDCNN_IMAGE_HPP_
#define CDCNN_IMAGE_HPP_

#include <cstdint>
#include <vector>

namespace cdcnn {

// 8-bit image, row-major, channels interleaved (1 = gray, 3 = RGB).
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 1;
  int index = 0;  // 1-based frame number within its sequence
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(int w, int h, int c, int idx = 0)
      : width(w), height(h), channels(c), index(idx),
        pixels(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Frame& other) const = default;
};

}  // namespace cdcnn

#endif  // CDCNN_IMAGE_HPP_

#include "cdcnn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdcnn/errors.hpp"

namespace cdcnn {

bool BBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
         w > 0.0 && h > 0.0;
}

BBox box_from_center(double cx, double cy, double w, double h) {
  return BBox{cx - w / 2.0, cy - h / 2.0, w, h};
}

void require_valid(const BBox& box, const char* what) {
  if (!box.valid()) {
    throw InvalidInput(std::string(what) + ": degenerate box (w=" + std::to_string(box.w) +
                       ", h=" + std::to_string(box.h) + ")");
  }
}

double iou(const BBox& a, const BBox& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  // Areas from the same edge differences as the intersection, so iou(a, a) == 1 exactly.
  const double inter = iw * ih;
  const double uni = (a.right() - a.x) * (a.bottom() - a.y) + (b.right() - b.x) * (b.bottom() - b.y) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const BBox& a, const BBox& b) {
  require_valid(a, "center_distance");
  require_valid(b, "center_distance");
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

BBox average_boxes(std::span<const BBox> boxes) {
  if (boxes.empty()) throw InvalidInput("average_boxes: empty list");
  BBox sum;
  for (const auto& b : boxes) {
    require_valid(b, "average_boxes");
    sum.x += b.x;
    sum.y += b.y;
    sum.w += b.w;
    sum.h += b.h;
  }
  const double n = static_cast<double>(boxes.size());
  BBox mean{sum.x / n, sum.y / n, sum.w / n, sum.h / n};
  // k copies of one box must come back bit-exactly; the division above can
  // round differently from the original value.
  if (std::all_of(boxes.begin(), boxes.end(), [&](const BBox& b) { return b == boxes.front(); })) {
    return boxes.front();
  }
  return mean;
}

std::optional<BBox> clip_box(const BBox& box, double frame_w, double frame_h) {
  const double x0 = std::max(box.x, 0.0);
  const double y0 = std::max(box.y, 0.0);
  const double x1 = std::min(box.right(), frame_w);
  const double y1 = std::min(box.bottom(), frame_h);
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

Patch crop_resize_normalize(const Frame& frame, const BBox& box, int side) {
  if (side <= 0) throw InvalidInput("crop_resize_normalize: side must be positive");
  if (frame.width <= 0 || frame.height <= 0) throw InvalidInput("crop_resize_normalize: empty frame");
  const auto clipped = clip_box(box, frame.width, frame.height);
  if (!clipped) throw OutOfView("crop_resize_normalize: box lies outside the frame");

  Patch patch;
  patch.side = side;
  patch.channels = frame.channels;
  patch.source_box = *clipped;
  patch.pixels.resize(static_cast<std::size_t>(side) * side * frame.channels);

  const double sx = clipped->w / side;
  const double sy = clipped->h / side;
  const int max_x = frame.width - 1;
  const int max_y = frame.height - 1;
  constexpr double kScale = 1.0 / 255.0;

  std::size_t out = 0;
  for (int row = 0; row < side; ++row) {
    const double fy = std::clamp(clipped->y + (row + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_y));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, max_y);
    const double ty = fy - y0;
    for (int col = 0; col < side; ++col) {
      const double fx = std::clamp(clipped->x + (col + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_x));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, max_x);
      const double tx = fx - x0;
      for (int c = 0; c < frame.channels; ++c) {
        const double top = (1.0 - tx) * frame.at(x0, y0, c) + tx * frame.at(x1, y0, c);
        const double bot = (1.0 - tx) * frame.at(x0, y1, c) + tx * frame.at(x1, y1, c);
        patch.pixels[out++] = ((1.0 - ty) * top + ty * bot) * kScale;
      }
    }
  }

  double mean = 0.0;
  for (double v : patch.pixels) mean += v;
  mean /= static_cast<double>(patch.pixels.size());
  for (double& v : patch.pixels) v -= mean;
  return patch;
}

}  // namespace cdcnn

#ifndef CDCNN_GEOMETRY_HPP_
#define CDCNN_GEOMETRY_HPP_

#include <optional>
#include <span>
#include <vector>

#include "cdcnn/image.hpp"

namespace cdcnn {

// Axis-aligned box in pixel coordinates; (x, y) is the top-left corner.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double cx() const { return x + w / 2.0; }
  double cy() const { return y + h / 2.0; }
  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  bool valid() const;

  bool operator==(const BBox& other) const = default;
};

BBox box_from_center(double cx, double cy, double w, double h);

// Throws InvalidInput unless w > 0 and h > 0 and all fields are finite.
void require_valid(const BBox& box, const char* what);

double iou(const BBox& a, const BBox& b);
double center_distance(const BBox& a, const BBox& b);
BBox average_boxes(std::span<const BBox> boxes);

// Intersection with [0, frame_w] x [0, frame_h]; nullopt if nothing remains.
std::optional<BBox> clip_box(const BBox& box, double frame_w, double frame_h);

// Resampled, normalized pixels of a box region. Values are laid out
// channel-interleaved, row-major, so the flattened vector feeds fc1 directly.
struct Patch {
  int side = 0;
  int channels = 1;
  std::vector<double> pixels;
  BBox source_box;

  std::size_t size() const { return pixels.size(); }
};

// Clips `box` to the frame, bilinearly resamples the region to side x side
// (pixel centres at half-integer offsets, edge-clamped), scales to [0,1] and
// subtracts the patch mean. Throws OutOfView if the clipped region is empty.
Patch crop_resize_normalize(const Frame& frame, const BBox& box, int side);

}  // namespace cdcnn

#endif  // CDCNN_GEOMETRY_HPP_

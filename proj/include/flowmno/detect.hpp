#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "flowmno/core/grid.hpp"

namespace flowmno::detect {

/// Axis-aligned box anchored at its top-left corner, in pixels.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  std::int64_t frame_id = 0;
  Box box;
  double confidence = 0.0;
  int class_id = 0;
  std::optional<std::int64_t> ped_id;

  /// Throws std::invalid_argument on non-positive extent or confidence outside [0,1].
  void validate() const;
  friend bool operator==(const Detection&, const Detection&) = default;
};

inline constexpr double kDefaultIouThreshold = 0.45;
inline constexpr double kDefaultConfThreshold = 0.5;

double iou(const Box& a, const Box& b);

/// Class-aware greedy suppression. Output is sorted by descending confidence,
/// ties resolved by smaller box x, then smaller y.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold = kDefaultIouThreshold,
                           double conf_threshold = kDefaultConfThreshold);

/// 4-connected components of pixels strictly above `intensity_threshold`.
std::vector<Detection> blob_detect(const GrayFrame& frame, double intensity_threshold,
                                   int min_area, std::int64_t frame_id = 0);

inline Vec2 centroid(const Detection& det) {
  return {det.box.x + det.box.w / 2.0, det.box.y + det.box.h / 2.0};
}

}  // namespace flowmno::detect

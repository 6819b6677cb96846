#include "flowmno/detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowmno::detect {

void Detection::validate() const {
  if (!(box.w > 0.0 && box.h > 0.0)) {
    throw std::invalid_argument("Detection: box extent must be positive");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw std::invalid_argument("Detection: confidence outside [0,1]");
  }
  if (frame_id < 0) throw std::invalid_argument("Detection: negative frame_id");
}

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold,
                           double conf_threshold) {
  std::erase_if(dets, [&](const Detection& d) { return d.confidence < conf_threshold; });
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    return a.box.y < b.box.y;
  });

  std::vector<Detection> kept;
  std::vector<bool> suppressed(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (!suppressed[j] && dets[j].class_id == dets[i].class_id &&
          iou(dets[i].box, dets[j].box) > iou_threshold) {
        suppressed[j] = true;
      }
    }
  }
  return kept;
}

std::vector<Detection> blob_detect(const GrayFrame& frame, double intensity_threshold,
                                   int min_area, std::int64_t frame_id) {
  if (!(intensity_threshold > 0.0 && intensity_threshold < 1.0)) {
    throw std::invalid_argument("blob_detect: threshold must lie in (0,1)");
  }
  const Eigen::Index w = frame.width();
  const Eigen::Index h = frame.height();
  const auto& img = frame.plane();

  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label =
      decltype(label)::Constant(h, w, -1);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  std::vector<Detection> out;
  int next_label = 0;

  for (Eigen::Index y0 = 0; y0 < h; ++y0) {
    for (Eigen::Index x0 = 0; x0 < w; ++x0) {
      if (label(y0, x0) >= 0 || !(img(y0, x0) > intensity_threshold)) continue;
      const int id = next_label++;
      Eigen::Index xmin = x0, xmax = x0, ymin = y0, ymax = y0;
      double sum = 0.0;
      int area = 0;
      label(y0, x0) = id;
      stack.assign({{x0, y0}});
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        ++area;
        sum += img(y, x);
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
        constexpr int kDx[4] = {1, -1, 0, 0};
        constexpr int kDy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const Eigen::Index nx = x + kDx[k];
          const Eigen::Index ny = y + kDy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (label(ny, nx) >= 0 || !(img(ny, nx) > intensity_threshold)) continue;
          label(ny, nx) = id;
          stack.emplace_back(nx, ny);
        }
      }
      if (area < min_area) continue;
      Detection d;
      d.frame_id = frame_id;
      d.box = {static_cast<double>(xmin), static_cast<double>(ymin),
               static_cast<double>(xmax - xmin + 1), static_cast<double>(ymax - ymin + 1)};
      d.confidence = sum / area;
      d.class_id = 0;
      out.push_back(d);
    }
  }
  return out;
}

}  // namespace flowmno::detect

#pragma once

#include <vector>

#include "flowmno/core/grid.hpp"

namespace flowmno::farneback {

struct Params {
  double pyramid_scale = 0.5;
  int levels = 3;
  int window_size = 15;
  int iterations_per_level = 3;
  int poly_n = 5;
  double poly_sigma = 1.1;

  void validate() const;
};

/// Per-pixel quadratic model f(x) ~ x^T A x + b^T x + c, A symmetric.
struct PolyCoeffs {
  Plane axx, axy, ayy;
  Plane bx, by;
  Plane c;

  Eigen::Index width() const { return c.cols(); }
  Eigen::Index height() const { return c.rows(); }
};

/// Levels never shrink below this many pixels on either side.
inline constexpr Eigen::Index kMinPyramidSide = 16;

/// Tikhonov term added to the 2x2 normal equations of the displacement solve.
inline constexpr double kRegularization = 1e-6;

/// Normalized 1-D Gaussian kernel of odd length `size`.
Eigen::VectorXd gaussian_kernel(int size, double sigma);

/// Separable correlation with edge replication.
Plane separable_filter(const Plane& src, const Eigen::VectorXd& kx, const Eigen::VectorXd& ky);

/// Gaussian smoothing; kernel length chosen to cover +-3 sigma.
Plane gaussian_blur(const Plane& src, double sigma);

/// Bilinear, pixel-centre-aligned resize with clamped borders.
Plane resize(const Plane& src, Eigen::Index width, Eigen::Index height);

std::vector<GrayFrame> build_pyramid(const GrayFrame& frame, const Params& params);

/// Weighted least-squares quadratic fit over a poly_n x poly_n Gaussian window.
PolyCoeffs polynomial_expansion(const Plane& image, int poly_n, double poly_sigma);
inline PolyCoeffs polynomial_expansion(const GrayFrame& frame, int poly_n, double poly_sigma) {
  return polynomial_expansion(frame.plane(), poly_n, poly_sigma);
}

/// Dense flow such that prev(p) ~ next(p + flow(p)).
FlowField estimate_flow(const GrayFrame& prev, const GrayFrame& next, const Params& params = {});

}  // namespace flowmno::farneback

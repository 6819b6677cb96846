#include "flowmno/farneback.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace flowmno::farneback {

void Params::validate() const {
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0)) {
    throw std::invalid_argument("farneback: pyramid_scale must lie in (0,1)");
  }
  if (levels < 1) throw std::invalid_argument("farneback: levels must be >= 1");
  if (window_size < 1 || window_size % 2 == 0) {
    throw std::invalid_argument("farneback: window_size must be odd and positive");
  }
  if (iterations_per_level < 1) {
    throw std::invalid_argument("farneback: iterations_per_level must be >= 1");
  }
  if (poly_n < 3 || poly_n % 2 == 0) {
    throw std::invalid_argument("farneback: poly_n must be odd and >= 3");
  }
  if (!(poly_sigma > 0.0)) throw std::invalid_argument("farneback: poly_sigma must be positive");
}

Eigen::VectorXd gaussian_kernel(int size, double sigma) {
  const int half = size / 2;
  Eigen::VectorXd k(size);
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return k / k.sum();
}

Plane separable_filter(const Plane& src, const Eigen::VectorXd& kx, const Eigen::VectorXd& ky) {
  const Eigen::Index h = src.rows();
  const Eigen::Index w = src.cols();
  const Eigen::Index hx = kx.size() / 2;
  const Eigen::Index hy = ky.size() / 2;

  Plane tmp(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < kx.size(); ++i) {
        const Eigen::Index sx = std::clamp<Eigen::Index>(x + i - hx, 0, w - 1);
        acc += kx[i] * src(y, sx);
      }
      tmp(y, x) = acc;
    }
  }
  Plane out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < ky.size(); ++i) {
        const Eigen::Index sy = std::clamp<Eigen::Index>(y + i - hy, 0, h - 1);
        acc += ky[i] * tmp(sy, x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

Plane gaussian_blur(const Plane& src, double sigma) {
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const Eigen::VectorXd k = gaussian_kernel(2 * half + 1, sigma);
  return separable_filter(src, k, k);
}

Plane resize(const Plane& src, Eigen::Index width, Eigen::Index height) {
  Plane out(height, width);
  const double sx = static_cast<double>(src.cols()) / static_cast<double>(width);
  const double sy = static_cast<double>(src.rows()) / static_cast<double>(height);
  for (Eigen::Index y = 0; y < height; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    for (Eigen::Index x = 0; x < width; ++x) {
      const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      out(y, x) = bilinear_sample(src, fx, fy);
    }
  }
  return out;
}

namespace {

std::vector<Plane> pyramid_planes(const Plane& base, const Params& params) {
  std::vector<Plane> levels{base};
  const double sigma = 0.5 / params.pyramid_scale;
  double scale = 1.0;
  for (int l = 1; l < params.levels; ++l) {
    scale *= params.pyramid_scale;
    const auto w = static_cast<Eigen::Index>(std::lround(static_cast<double>(base.cols()) * scale));
    const auto h = static_cast<Eigen::Index>(std::lround(static_cast<double>(base.rows()) * scale));
    if (w < kMinPyramidSide || h < kMinPyramidSide) break;
    levels.push_back(resize(gaussian_blur(levels.back(), sigma), w, h));
  }
  return levels;
}

// Solves for the displacement field on one level, refining `u`/`v` in place.
void refine_level(const PolyCoeffs& r0, const PolyCoeffs& r1, const Params& params, Plane& u,
                  Plane& v) {
  const Eigen::Index h = r0.height();
  const Eigen::Index w = r0.width();
  const Eigen::VectorXd window =
      gaussian_kernel(params.window_size, static_cast<double>(params.window_size) / 4.0);

  Plane g11(h, w), g12(h, w), g22(h, w), h1(h, w), h2(h, w);
  for (int it = 0; it < params.iterations_per_level; ++it) {
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        const double dx = u(y, x);
        const double dy = v(y, x);
        const double wx = static_cast<double>(x) + dx;
        const double wy = static_cast<double>(y) + dy;

        Eigen::Matrix2d a;
        const double axy = 0.5 * (r0.axy(y, x) + bilinear_sample(r1.axy, wx, wy));
        a << 0.5 * (r0.axx(y, x) + bilinear_sample(r1.axx, wx, wy)), axy, axy,
            0.5 * (r0.ayy(y, x) + bilinear_sample(r1.ayy, wx, wy));
        const Eigen::Vector2d b0(r0.bx(y, x), r0.by(y, x));
        const Eigen::Vector2d b1(bilinear_sample(r1.bx, wx, wy), bilinear_sample(r1.by, wx, wy));
        const Eigen::Vector2d db = -0.5 * (b1 - b0) + a * Eigen::Vector2d(dx, dy);

        const Eigen::Matrix2d g = a.transpose() * a;
        const Eigen::Vector2d rhs = a.transpose() * db;
        g11(y, x) = g(0, 0);
        g12(y, x) = g(0, 1);
        g22(y, x) = g(1, 1);
        h1(y, x) = rhs.x();
        h2(y, x) = rhs.y();
      }
    }
    const Plane sg11 = separable_filter(g11, window, window);
    const Plane sg12 = separable_filter(g12, window, window);
    const Plane sg22 = separable_filter(g22, window, window);
    const Plane sh1 = separable_filter(h1, window, window);
    const Plane sh2 = separable_filter(h2, window, window);
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        const double a11 = sg11(y, x) + kRegularization;
        const double a22 = sg22(y, x) + kRegularization;
        const double a12 = sg12(y, x);
        const double det = a11 * a22 - a12 * a12;
        u(y, x) = (a22 * sh1(y, x) - a12 * sh2(y, x)) / det;
        v(y, x) = (a11 * sh2(y, x) - a12 * sh1(y, x)) / det;
      }
    }
  }
}

}  // namespace

std::vector<GrayFrame> build_pyramid(const GrayFrame& frame, const Params& params) {
  params.validate();
  std::vector<GrayFrame> out;
  for (auto& p : pyramid_planes(frame.plane(), params)) {
    // Interpolation of values in [0,1] stays in range up to round-off.
    out.emplace_back(p.cwiseMax(0.0).cwiseMin(1.0));
  }
  return out;
}

PolyCoeffs polynomial_expansion(const Plane& image, int poly_n, double poly_sigma) {
  const int n = poly_n;
  const int half = n / 2;

  // Basis order: 1, x, y, x^2, y^2, xy.
  Eigen::MatrixXd basis(n * n, 6);
  Eigen::VectorXd weight(n * n);
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const int row = (dy + half) * n + (dx + half);
      basis.row(row) << 1.0, dx, dy, dx * dx, dy * dy, dx * dy;
      weight[row] = std::exp(-(dx * dx + dy * dy) / (2.0 * poly_sigma * poly_sigma));
    }
  }
  const Eigen::MatrixXd bw = basis.transpose() * weight.asDiagonal();
  const Eigen::MatrixXd projector = (bw * basis).ldlt().solve(bw);  // 6 x n^2

  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  std::array<Plane, 6> coeff;
  for (auto& c : coeff) c.resize(h, w);

  Eigen::VectorXd patch(n * n);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      for (int dy = -half; dy <= half; ++dy) {
        const Eigen::Index sy = std::clamp<Eigen::Index>(y + dy, 0, h - 1);
        for (int dx = -half; dx <= half; ++dx) {
          const Eigen::Index sx = std::clamp<Eigen::Index>(x + dx, 0, w - 1);
          patch[(dy + half) * n + (dx + half)] = image(sy, sx);
        }
      }
      const Eigen::Matrix<double, 6, 1> r = projector * patch;
      for (int k = 0; k < 6; ++k) coeff[k](y, x) = r[k];
    }
  }

  PolyCoeffs out;
  out.c = std::move(coeff[0]);
  out.bx = std::move(coeff[1]);
  out.by = std::move(coeff[2]);
  out.axx = std::move(coeff[3]);
  out.ayy = std::move(coeff[4]);
  out.axy = coeff[5] * 0.5;
  return out;
}

FlowField estimate_flow(const GrayFrame& prev, const GrayFrame& next, const Params& params) {
  params.validate();
  if (prev.width() != next.width() || prev.height() != next.height()) {
    throw IncompatibleGrids("estimate_flow: frames " + shape_string(prev.width(), prev.height()) +
                            " vs " + shape_string(next.width(), next.height()));
  }
  const auto p0 = pyramid_planes(prev.plane(), params);
  const auto p1 = pyramid_planes(next.plane(), params);

  Plane u, v;
  for (auto level = static_cast<std::ptrdiff_t>(p0.size()) - 1; level >= 0; --level) {
    const Plane& f0 = p0[static_cast<std::size_t>(level)];
    const Plane& f1 = p1[static_cast<std::size_t>(level)];
    if (u.size() == 0) {
      u = Plane::Zero(f0.rows(), f0.cols());
      v = Plane::Zero(f0.rows(), f0.cols());
    } else {
      const double sx = static_cast<double>(f0.cols()) / static_cast<double>(u.cols());
      const double sy = static_cast<double>(f0.rows()) / static_cast<double>(u.rows());
      u = resize(u, f0.cols(), f0.rows()) * sx;
      v = resize(v, f0.cols(), f0.rows()) * sy;
    }
    const PolyCoeffs r0 = polynomial_expansion(f0, params.poly_n, params.poly_sigma);
    const PolyCoeffs r1 = polynomial_expansion(f1, params.poly_n, params.poly_sigma);
    refine_level(r0, r1, params, u, v);
  }
  return FlowField(std::move(u), std::move(v));
}

}  // namespace flowmno::farneback

#include "flowmno/mno/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flowmno::mno {

namespace {

// exp(-2 pi i k n / N) with the product reduced mod N for accuracy.
void twiddle(long k, long n, long size, double& re, double& im) {
  const long r = ((k * n) % size + size) % size;
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(size);
  re = std::cos(angle);
  im = std::sin(angle);
}

}  // namespace

SpectralTransform::SpectralTransform(int height, int width, int modes_x, int modes_y)
    : height_(height), width_(width), modes_x_(modes_x), modes_y_(modes_y) {
  if (height <= 0 || width <= 0 || modes_x <= 0 || modes_y <= 0 || 2 * modes_x > width ||
      2 * modes_y > height) {
    throw std::invalid_argument("SpectralTransform: modes must satisfy 0 < modes <= grid/2");
  }
  fy_re_.resize(rows(), height);
  fy_im_.resize(rows(), height);
  for (int j = 0; j < rows(); ++j) {
    for (int y = 0; y < height; ++y) twiddle(ky(j), y, height, fy_re_(j, y), fy_im_(j, y));
  }
  fx_re_.resize(width, modes_x);
  fx_im_.resize(width, modes_x);
  for (int x = 0; x < width; ++x) {
    for (int k = 0; k < modes_x; ++k) twiddle(k, x, width, fx_re_(x, k), fx_im_(x, k));
  }
}

void SpectralTransform::analysis(const Eigen::Ref<const RowMatrix>& x, RowMatrix& re,
                                 RowMatrix& im) const {
  const RowMatrix t_re = x * fx_re_;  // H x cols
  const RowMatrix t_im = x * fx_im_;
  re.noalias() = fy_re_ * t_re;
  re.noalias() -= fy_im_ * t_im;
  im.noalias() = fy_re_ * t_im;
  im.noalias() += fy_im_ * t_re;
}

RowMatrix SpectralTransform::synthesis(const Eigen::Ref<const RowMatrix>& re,
                                       const Eigen::Ref<const RowMatrix>& im) const {
  // conj(Fy)^T = Fy_re^T - i Fy_im^T, conj(Fx)^T = Fx_re^T - i Fx_im^T.
  RowMatrix u_re(height_, cols());
  RowMatrix u_im(height_, cols());
  u_re.noalias() = fy_re_.transpose() * re;
  u_re.noalias() += fy_im_.transpose() * im;
  u_im.noalias() = fy_re_.transpose() * im;
  u_im.noalias() -= fy_im_.transpose() * re;
  RowMatrix out(height_, width_);
  out.noalias() = u_re * fx_re_.transpose();
  out.noalias() += u_im * fx_im_.transpose();
  return out;
}

}  // namespace flowmno::mno

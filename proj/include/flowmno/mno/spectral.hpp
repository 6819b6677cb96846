#pragma once

#include <Eigen/Dense>

namespace flowmno::mno {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Low-frequency block of a real 2-D Fourier transform.
///
/// Retained modes are kx in [0, modes_x) along the row axis (half spectrum) and
/// ky in {0..modes_y-1} U {-modes_y..-1} along the column axis, giving a
/// (2*modes_y) x modes_x block. Row j < modes_y holds ky = j, row j >= modes_y
/// holds ky = j - 2*modes_y.
///
///   analysis(X)  = Fy X Fx                      (unnormalised forward DFT)
///   synthesis(Z) = Re(conj(Fy)^T Z conj(Fx)^T)
///
/// The inverse transform of a half spectrum is synthesis(c .* Z) / (H W) with
/// c = 1 on the kx = 0 column and 2 elsewhere; taking the real part projects the
/// kx = 0 column onto its Hermitian-symmetric part, so outputs are real by
/// construction. synthesis is the exact adjoint of analysis under the real inner
/// product Re<a, b>, which is what the backward pass relies on.
class SpectralTransform {
 public:
  SpectralTransform(int height, int width, int modes_x, int modes_y);

  int height() const { return height_; }
  int width() const { return width_; }
  int rows() const { return 2 * modes_y_; }
  int cols() const { return modes_x_; }
  int num_modes() const { return rows() * cols(); }

  /// Signed vertical frequency of spectrum row j.
  int ky(int j) const { return j < modes_y_ ? j : j - 2 * modes_y_; }

  /// X is H x W; writes rows() x cols() real and imaginary parts.
  void analysis(const Eigen::Ref<const RowMatrix>& x, RowMatrix& re, RowMatrix& im) const;
  /// Z is rows() x cols(); returns the H x W real part of the synthesis.
  RowMatrix synthesis(const Eigen::Ref<const RowMatrix>& re,
                      const Eigen::Ref<const RowMatrix>& im) const;

  /// Half-spectrum weight c(kx): 1 for kx = 0, 2 otherwise.
  double column_weight(int kx) const { return kx == 0 ? 1.0 : 2.0; }

 private:
  int height_, width_, modes_x_, modes_y_;
  RowMatrix fy_re_, fy_im_;  // rows() x H
  RowMatrix fx_re_, fx_im_;  // W x cols()
};

}  // namespace flowmno::mno

#include "flowmno/mno/loss.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flowmno::mno {

namespace {

using ComplexPlane = Eigen::MatrixXcd;

// Full unnormalised DFT matrix of size n (symmetric).
Eigen::MatrixXcd dft_matrix(Eigen::Index n) {
  Eigen::MatrixXcd f(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const Eigen::Index r = (a * b) % n;
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
      f(a, b) = {std::cos(angle), std::sin(angle)};
    }
  }
  return f;
}

double signed_frequency(Eigen::Index k, Eigen::Index n) {
  return static_cast<double>(2 * k <= n ? k : k - n);
}

// Per-mode weights sum_{i=0..k} s^i with s = n_x^2 + n_y^2, laid out H x W.
Eigen::MatrixXd sobolev_weights(Eigen::Index h, Eigen::Index w, int k) {
  Eigen::MatrixXd out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double ny = signed_frequency(y, h);
      const double nx = signed_frequency(x, w);
      const double s = nx * nx + ny * ny;
      double term = 1.0;
      double total = 0.0;
      for (int i = 0; i <= k; ++i) {
        total += term;
        term *= s;
      }
      out(y, x) = total;
    }
  }
  return out;
}

struct Dft2 {
  Eigen::MatrixXcd fy, fx;
  Dft2(Eigen::Index h, Eigen::Index w) : fy(dft_matrix(h)), fx(dft_matrix(w)) {}

  ComplexPlane forward(const Plane& r) const {
    return fy * (r.matrix().cast<std::complex<double>>() * fx);
  }
  // Unnormalised inverse, real part.
  Eigen::MatrixXd inverse_real(const ComplexPlane& z) const {
    return (fy.conjugate() * z * fx.conjugate()).real();
  }
};

}  // namespace

void LossConfig::validate() const {
  if (k < 0) throw std::invalid_argument("loss: Sobolev order k must be >= 0");
}

double mse_loss(const FlowField& pred, const FlowField& target) {
  require_same_shape(pred, target, "mse_loss");
  const double sum = (pred.u() - target.u()).square().sum() + (pred.v() - target.v()).square().sum();
  return sum / (2.0 * static_cast<double>(pred.size()));
}

double sobolev_loss(const FlowField& pred, const FlowField& target, int k) {
  require_same_shape(pred, target, "sobolev_loss");
  if (k < 0) throw std::invalid_argument("sobolev_loss: k must be >= 0");
  const Eigen::Index h = pred.height();
  const Eigen::Index w = pred.width();
  const Dft2 dft(h, w);
  const Eigen::MatrixXd weights = sobolev_weights(h, w, k);
  const double n = static_cast<double>(h * w);
  auto energy = [&](const Plane& r) {
    const ComplexPlane rhat = dft.forward(r) / n;
    return (weights.array() * rhat.array().abs2()).sum();
  };
  const double total = energy(pred.u() - target.u()) + energy(pred.v() - target.v());
  return 0.5 * total;
}

LossValue loss_with_gradient(const FlowField& pred, const FlowField& target,
                             const LossConfig& cfg) {
  cfg.validate();
  require_same_shape(pred, target, "loss");
  const double n = static_cast<double>(pred.size());
  Plane du = pred.u() - target.u();
  Plane dv = pred.v() - target.v();

  if (cfg.kind == LossKind::mse) {
    const double value = (du.square().sum() + dv.square().sum()) / (2.0 * n);
    return {value, FlowField(du / n, dv / n)};
  }

  const Eigen::Index h = pred.height();
  const Eigen::Index w = pred.width();
  const Dft2 dft(h, w);
  const Eigen::MatrixXd weights = sobolev_weights(h, w, cfg.k);
  double value = 0.0;
  auto channel = [&](const Plane& r) {
    const ComplexPlane rhat = dft.forward(r);
    value += 0.5 * (weights.array() * rhat.array().abs2()).sum() / (n * n);
    const ComplexPlane weighted = (rhat.array() * weights.array()).matrix();
    return Plane(dft.inverse_real(weighted).array() / (n * n));
  };
  Plane gu = channel(du);
  Plane gv = channel(dv);
  return {value, FlowField(std::move(gu), std::move(gv))};
}

double loss(const FlowField& pred, const FlowField& target, const LossConfig& cfg) {
  cfg.validate();
  return cfg.kind == LossKind::mse ? mse_loss(pred, target) : sobolev_loss(pred, target, cfg.k);
}

}  // namespace flowmno::mno

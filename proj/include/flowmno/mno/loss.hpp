#pragma once

#include "flowmno/core/grid.hpp"

namespace flowmno::mno {

enum class LossKind { mse, sobolev };

struct LossConfig {
  LossKind kind = LossKind::mse;
  int k = 0;  // Sobolev order; p is fixed at 2.

  void validate() const;
};

/// Mean over pixels and both channels of the squared component difference.
double mse_loss(const FlowField& pred, const FlowField& target);

/// Squared Sobolev H^k norm of pred - target evaluated on the Fourier side.
///
/// With r_hat = DFT(r) / (H W), each mode (n_x, n_y) with signed integer
/// frequencies is weighted by sum_{i=0..k} (n_x^2 + n_y^2)^i and the result is
/// averaged over the two channels, so k = 0 reproduces mse_loss exactly
/// (Parseval).
double sobolev_loss(const FlowField& pred, const FlowField& target, int k);

struct LossValue {
  double value = 0.0;
  FlowField grad;  // d value / d pred
};

LossValue loss_with_gradient(const FlowField& pred, const FlowField& target,
                             const LossConfig& cfg);

double loss(const FlowField& pred, const FlowField& target, const LossConfig& cfg);

}  // namespace flowmno::mno

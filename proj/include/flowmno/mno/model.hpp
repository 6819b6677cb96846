#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flowmno/core/grid.hpp"
#include "flowmno/mno/spectral.hpp"

namespace flowmno::mno {

struct ModelConfig {
  int grid_h = 64;
  int grid_w = 64;
  int modes_x = 12;
  int modes_y = 12;
  int width = 32;
  int num_blocks = 4;
  int projection_hidden = 64;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One named tensor inside the flat parameter vector. Complex tensors carry a
/// trailing dimension of 2 holding [real, imag].
struct TensorSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
  Eigen::Index offset = 0;

  Eigen::Index size() const;
};

class ParameterLayout {
 public:
  explicit ParameterLayout(const ModelConfig& cfg);

  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  const TensorSpec& at(const std::string& name) const;
  Eigen::Index total_size() const { return total_; }

 private:
  void add(std::string name, std::vector<std::uint32_t> dims);

  std::vector<TensorSpec> tensors_;
  Eigen::Index total_ = 0;
};

using ComplexRowMatrix =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;
using ConstComplexView = Eigen::Map<const ComplexRowMatrix>;

/// Lifting 2 -> width, spectral blocks with pointwise bypass, then a two-layer
/// pointwise projection width -> projection_hidden -> 2. All parameters live in
/// one flat vector so gradients and optimiser state share the same layout.
class MnoModel {
 public:
  /// All parameters zero.
  explicit MnoModel(const ModelConfig& cfg);

  /// Seeded initialisation: affine entries uniform in +-1/sqrt(fan_in), spectral
  /// entries uniform in the complex disc of radius 1/width^2.
  static MnoModel initialized(const ModelConfig& cfg);

  /// Parameters that make forward() the identity on flow fields whose
  /// components stay within +-kIdentityRange.
  static MnoModel identity(const ModelConfig& cfg);
  static constexpr double kIdentityRange = 16.0;

  const ModelConfig& config() const { return cfg_; }
  const ParameterLayout& layout() const { return layout_; }
  const SpectralTransform& transform() const { return transform_; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  /// Matrix view (rows = dims[0]) of a real 1-D or 2-D tensor.
  MatrixView matrix(const std::string& name);
  ConstMatrixView matrix(const std::string& name) const;
  ConstVectorView vector(const std::string& name) const;

  /// in x out complex mixing matrix for spectrum row `row`, column `kx` of block `block`.
  ConstComplexView spectral_mode(int block, int row, int kx) const;
  Eigen::Index spectral_offset(int block, int row, int kx) const;

  friend bool operator==(const MnoModel& a, const MnoModel& b) {
    return a.cfg_ == b.cfg_ && a.params_ == b.params_;
  }

 private:
  ModelConfig cfg_;
  ParameterLayout layout_;
  SpectralTransform transform_;
  Eigen::VectorXd params_;
  std::vector<std::array<Eigen::Index, 2>> spectral_base_;  // per block: pos, neg
};

std::string block_tensor(int block, const char* leaf);

/// Gaussian-error linear unit and its derivative.
double gelu(double x);
double gelu_derivative(double x);

/// Standard normal CDF, elementwise.
RowMatrix normal_cdf(const RowMatrix& x);
/// d gelu / dx given x and its precomputed normal CDF.
RowMatrix gelu_derivative(const RowMatrix& x, const RowMatrix& cdf);

/// Intermediate values recorded by a forward pass for reverse-mode use.
struct ForwardCache {
  RowMatrix input;                      // 2 x N
  std::vector<RowMatrix> block_inputs;  // width x N each
  std::vector<RowMatrix> pre_activations;
  std::vector<RowMatrix> cdfs;          // Phi(pre_activation) for nonlinear blocks
  std::vector<RowMatrix> spectra_re;  // width x modes per block
  std::vector<RowMatrix> spectra_im;
  RowMatrix final_features;  // width x N
  RowMatrix hidden_pre;      // hidden x N
  RowMatrix hidden_cdf;
  RowMatrix output;          // 2 x N
};

FlowField forward(const MnoModel& model, const FlowField& flow_in);
FlowField forward(const MnoModel& model, const FlowField& flow_in, ForwardCache& cache);

/// [S(f0), S^2(f0), ..., S^n(f0)].
std::vector<FlowField> rollout(const MnoModel& model, const FlowField& flow0, int n);

/// Flattens a flow field to a 2 x N channel matrix and back.
RowMatrix to_channels(const FlowField& f);
FlowField from_channels(const RowMatrix& m, Eigen::Index width, Eigen::Index height);

}  // namespace flowmno::mno

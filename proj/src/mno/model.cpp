#include "flowmno/mno/model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace flowmno::mno {

void ModelConfig::validate() const {
  if (grid_h <= 0 || grid_w <= 0) throw std::invalid_argument("model: grid must be positive");
  if (modes_x <= 0 || modes_y <= 0) throw std::invalid_argument("model: modes must be positive");
  if (2 * modes_x > grid_w || 2 * modes_y > grid_h) {
    throw std::invalid_argument("model: modes_x <= grid_w/2 and modes_y <= grid_h/2 required");
  }
  if (width < 2) throw std::invalid_argument("model: width must be >= 2");
  if (num_blocks < 1) throw std::invalid_argument("model: num_blocks must be >= 1");
  if (projection_hidden < 2) throw std::invalid_argument("model: projection_hidden must be >= 2");
}

Eigen::Index TensorSpec::size() const {
  Eigen::Index n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string block_tensor(int block, const char* leaf) {
  return "blocks." + std::to_string(block) + "." + leaf;
}

ParameterLayout::ParameterLayout(const ModelConfig& cfg) {
  cfg.validate();
  const auto c = static_cast<std::uint32_t>(cfg.width);
  const auto hd = static_cast<std::uint32_t>(cfg.projection_hidden);
  const auto mx = static_cast<std::uint32_t>(cfg.modes_x);
  const auto my = static_cast<std::uint32_t>(cfg.modes_y);
  add("lift.weight", {c, 2});
  add("lift.bias", {c});
  for (int b = 0; b < cfg.num_blocks; ++b) {
    add(block_tensor(b, "spectral_pos"), {mx, my, c, c, 2});
    add(block_tensor(b, "spectral_neg"), {mx, my, c, c, 2});
    add(block_tensor(b, "bypass.weight"), {c, c});
    add(block_tensor(b, "bypass.bias"), {c});
  }
  add("proj1.weight", {hd, c});
  add("proj1.bias", {hd});
  add("proj2.weight", {2, hd});
  add("proj2.bias", {2});
}

void ParameterLayout::add(std::string name, std::vector<std::uint32_t> dims) {
  TensorSpec t{std::move(name), std::move(dims), total_};
  total_ += t.size();
  tensors_.push_back(std::move(t));
}

const TensorSpec& ParameterLayout::at(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("unknown tensor: " + name);
}

MnoModel::MnoModel(const ModelConfig& cfg)
    : cfg_(cfg),
      layout_(cfg),
      transform_(cfg.grid_h, cfg.grid_w, cfg.modes_x, cfg.modes_y),
      params_(Eigen::VectorXd::Zero(layout_.total_size())) {
  for (int b = 0; b < cfg.num_blocks; ++b) {
    spectral_base_.push_back({layout_.at(block_tensor(b, "spectral_pos")).offset,
                              layout_.at(block_tensor(b, "spectral_neg")).offset});
  }
}

MnoModel MnoModel::initialized(const ModelConfig& cfg) {
  MnoModel m(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& t : m.layout_.tensors()) {
    auto seg = m.params_.segment(t.offset, t.size());
    if (t.dims.size() == 5) {
      const double radius = 1.0 / (static_cast<double>(cfg.width) * cfg.width);
      for (Eigen::Index i = 0; i < seg.size(); i += 2) {
        const double r = radius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        seg[i] = r * std::cos(theta);
        seg[i + 1] = r * std::sin(theta);
      }
      continue;
    }
    // Biases use the fan-in of their layer.
    std::uint32_t fan_in = 0;
    if (t.dims.size() == 2) {
      fan_in = t.dims[1];
    } else if (t.name == "lift.bias") {
      fan_in = 2;
    } else if (t.name == "proj1.bias") {
      fan_in = static_cast<std::uint32_t>(cfg.width);
    } else if (t.name == "proj2.bias") {
      fan_in = static_cast<std::uint32_t>(cfg.projection_hidden);
    } else {
      fan_in = static_cast<std::uint32_t>(cfg.width);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < seg.size(); ++i) seg[i] = bound * (2.0 * unit(rng) - 1.0);
  }
  return m;
}

MnoModel MnoModel::identity(const ModelConfig& cfg) {
  // Offsetting the two carried channels by a large constant keeps every GELU
  // in its linear regime, where it equals the identity to double precision.
  constexpr double kShift = 2.0 * kIdentityRange;
  MnoModel m(cfg);
  auto lift = m.matrix("lift.weight");
  lift(0, 0) = 1.0;
  lift(1, 1) = 1.0;
  auto lift_bias = m.matrix("lift.bias");
  lift_bias(0, 0) = kShift;
  lift_bias(1, 0) = kShift;
  for (int b = 0; b < cfg.num_blocks; ++b) {
    m.matrix(block_tensor(b, "bypass.weight")).setIdentity();
  }
  auto p1 = m.matrix("proj1.weight");
  p1(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  auto p2 = m.matrix("proj2.weight");
  p2(0, 0) = 1.0;
  p2(1, 1) = 1.0;
  auto p2_bias = m.matrix("proj2.bias");
  p2_bias(0, 0) = -kShift;
  p2_bias(1, 0) = -kShift;
  return m;
}

MatrixView MnoModel::matrix(const std::string& name) {
  const auto& t = layout_.at(name);
  const Eigen::Index cols = t.dims.size() > 1 ? t.dims[1] : 1;
  return {params_.data() + t.offset, t.dims[0], cols};
}

ConstMatrixView MnoModel::matrix(const std::string& name) const {
  const auto& t = layout_.at(name);
  const Eigen::Index cols = t.dims.size() > 1 ? t.dims[1] : 1;
  return {params_.data() + t.offset, t.dims[0], cols};
}

ConstVectorView MnoModel::vector(const std::string& name) const {
  const auto& t = layout_.at(name);
  return {params_.data() + t.offset, t.size()};
}

Eigen::Index MnoModel::spectral_offset(int block, int row, int kx) const {
  const bool positive = row < cfg_.modes_y;
  const int j = positive ? row : row - cfg_.modes_y;
  const Eigen::Index base = spectral_base_[static_cast<std::size_t>(block)][positive ? 0 : 1];
  const Eigen::Index c = cfg_.width;
  return base + 2 * ((static_cast<Eigen::Index>(kx) * cfg_.modes_y + j) * c * c);
}

ConstComplexView MnoModel::spectral_mode(int block, int row, int kx) const {
  const auto* base = reinterpret_cast<const std::complex<double>*>(
      params_.data() + spectral_offset(block, row, kx));
  return {base, cfg_.width, cfg_.width};
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

RowMatrix normal_cdf(const RowMatrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); });
}

RowMatrix gelu_derivative(const RowMatrix& x, const RowMatrix& cdf) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const auto pdf = (-0.5 * x.array().square()).exp() * inv_sqrt_2pi;
  return (cdf.array() + x.array() * pdf).matrix();
}

RowMatrix to_channels(const FlowField& f) {
  RowMatrix m(2, f.size());
  m.row(0) = Eigen::Map<const Eigen::RowVectorXd>(f.u().data(), f.size());
  m.row(1) = Eigen::Map<const Eigen::RowVectorXd>(f.v().data(), f.size());
  return m;
}

FlowField from_channels(const RowMatrix& m, Eigen::Index width, Eigen::Index height) {
  Plane u = Eigen::Map<const Plane>(m.row(0).data(), height, width);
  Plane v = Eigen::Map<const Plane>(m.row(1).data(), height, width);
  return FlowField(std::move(u), std::move(v));
}

namespace {

RowMatrix spectral_apply(const MnoModel& model, int block, const RowMatrix& x, RowMatrix& spec_re,
                         RowMatrix& spec_im) {
  const auto& tr = model.transform();
  const int c = model.config().width;
  const int rows = tr.rows();
  const int cols = tr.cols();
  const Eigen::Index modes = tr.num_modes();
  const double inv_n = 1.0 / (static_cast<double>(tr.height()) * tr.width());

  spec_re.resize(c, modes);
  spec_im.resize(c, modes);
  RowMatrix re(rows, cols), im(rows, cols);
  for (int ch = 0; ch < c; ++ch) {
    tr.analysis(Eigen::Map<const RowMatrix>(x.row(ch).data(), tr.height(), tr.width()), re, im);
    spec_re.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(re.data(), modes);
    spec_im.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(im.data(), modes);
  }

  RowMatrix out_re(c, modes), out_im(c, modes);
  Eigen::VectorXcd xin(c);
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < cols; ++k) {
      const Eigen::Index m = static_cast<Eigen::Index>(r) * cols + k;
      xin.real() = spec_re.col(m);
      xin.imag() = spec_im.col(m);
      const Eigen::VectorXcd y = model.spectral_mode(block, r, k).transpose() * xin;
      const double w = tr.column_weight(k) * inv_n;
      out_re.col(m) = y.real() * w;
      out_im.col(m) = y.imag() * w;
    }
  }

  RowMatrix out(c, x.cols());
  for (int ch = 0; ch < c; ++ch) {
    const RowMatrix s = tr.synthesis(Eigen::Map<const RowMatrix>(out_re.row(ch).data(), rows, cols),
                                     Eigen::Map<const RowMatrix>(out_im.row(ch).data(), rows, cols));
    out.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), s.size());
  }
  return out;
}

}  // namespace

FlowField forward(const MnoModel& model, const FlowField& flow_in, ForwardCache& cache) {
  const auto& cfg = model.config();
  if (flow_in.width() != cfg.grid_w || flow_in.height() != cfg.grid_h) {
    throw IncompatibleGrids("mno forward: model grid " + shape_string(cfg.grid_w, cfg.grid_h) +
                            " vs flow " + shape_string(flow_in.width(), flow_in.height()));
  }
  cache.input = to_channels(flow_in);
  cache.block_inputs.resize(cfg.num_blocks);
  cache.pre_activations.resize(cfg.num_blocks);
  cache.spectra_re.resize(cfg.num_blocks);
  cache.spectra_im.resize(cfg.num_blocks);
  cache.cdfs.resize(cfg.num_blocks);

  RowMatrix x = (model.matrix("lift.weight") * cache.input).colwise() +
                model.vector("lift.bias");
  for (int b = 0; b < cfg.num_blocks; ++b) {
    RowMatrix z = spectral_apply(model, b, x, cache.spectra_re[b], cache.spectra_im[b]);
    z.noalias() += model.matrix(block_tensor(b, "bypass.weight")) * x;
    z.colwise() += model.vector(block_tensor(b, "bypass.bias"));
    cache.block_inputs[b] = std::move(x);
    if (b + 1 < cfg.num_blocks) {
      cache.cdfs[b] = normal_cdf(z);
      x = z.cwiseProduct(cache.cdfs[b]);
    } else {
      x = z;
    }
    cache.pre_activations[b] = std::move(z);
  }
  cache.final_features = std::move(x);
  cache.hidden_pre = (model.matrix("proj1.weight") * cache.final_features).colwise() +
                     model.vector("proj1.bias");
  cache.hidden_cdf = normal_cdf(cache.hidden_pre);
  const RowMatrix hidden = cache.hidden_pre.cwiseProduct(cache.hidden_cdf);
  cache.output = (model.matrix("proj2.weight") * hidden).colwise() + model.vector("proj2.bias");
  return from_channels(cache.output, cfg.grid_w, cfg.grid_h);
}

FlowField forward(const MnoModel& model, const FlowField& flow_in) {
  ForwardCache cache;
  return forward(model, flow_in, cache);
}

std::vector<FlowField> rollout(const MnoModel& model, const FlowField& flow0, int n) {
  if (n < 1) throw std::invalid_argument("rollout: n must be >= 1");
  std::vector<FlowField> out;
  out.reserve(static_cast<std::size_t>(n));
  out.push_back(forward(model, flow0));
  for (int k = 1; k < n; ++k) out.push_back(forward(model, out.back()));
  return out;
}

}  // namespace flowmno::mno

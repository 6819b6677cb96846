#include "flowmno/mno/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace flowmno::mno {

namespace {

RowMatrix gelu_grad(const RowMatrix& upstream, const RowMatrix& pre, const RowMatrix& cdf) {
  return upstream.cwiseProduct(gelu_derivative(pre, cdf));
}

void write_matrix(Eigen::VectorXd& grad, const TensorSpec& t, const RowMatrix& m) {
  Eigen::Map<RowMatrix>(grad.data() + t.offset, m.rows(), m.cols()) += m;
}

void write_vector(Eigen::VectorXd& grad, const TensorSpec& t, const Eigen::VectorXd& v) {
  grad.segment(t.offset, t.size()) += v;
}

// Back-propagates through one spectral convolution. Accumulates weight
// gradients into `grad` and returns d loss / d block input.
RowMatrix spectral_backward(const MnoModel& model, int block, const ForwardCache& cache,
                            const RowMatrix& d_out, Eigen::VectorXd& grad) {
  const auto& tr = model.transform();
  const int c = model.config().width;
  const int rows = tr.rows();
  const int cols = tr.cols();
  const Eigen::Index modes = tr.num_modes();
  const double inv_n = 1.0 / (static_cast<double>(tr.height()) * tr.width());

  // Adjoint of the scaled inverse transform: c(kx)/N * analysis(d_out).
  RowMatrix g_re(c, modes), g_im(c, modes);
  RowMatrix re(rows, cols), im(rows, cols);
  for (int ch = 0; ch < c; ++ch) {
    tr.analysis(Eigen::Map<const RowMatrix>(d_out.row(ch).data(), tr.height(), tr.width()), re,
                im);
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < cols; ++k) {
        const double w = tr.column_weight(k) * inv_n;
        g_re(ch, r * cols + k) = re(r, k) * w;
        g_im(ch, r * cols + k) = im(r, k) * w;
      }
    }
  }

  const RowMatrix& x_re = cache.spectra_re[block];
  const RowMatrix& x_im = cache.spectra_im[block];
  RowMatrix dx_re(c, modes), dx_im(c, modes);
  Eigen::VectorXcd gy(c), xin(c);
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < cols; ++k) {
      const Eigen::Index m = static_cast<Eigen::Index>(r) * cols + k;
      gy.real() = g_re.col(m);
      gy.imag() = g_im.col(m);
      xin.real() = x_re.col(m);
      xin.imag() = x_im.col(m);
      // y = W^T x  =>  dW = conj(x) gy^T,  dx = conj(W) gy.
      auto* dw = reinterpret_cast<std::complex<double>*>(
          grad.data() + model.spectral_offset(block, r, k));
      Eigen::Map<ComplexRowMatrix>(dw, c, c).noalias() += xin.conjugate() * gy.transpose();
      const Eigen::VectorXcd dx = model.spectral_mode(block, r, k).conjugate() * gy;
      dx_re.col(m) = dx.real();
      dx_im.col(m) = dx.imag();
    }
  }

  // Adjoint of analysis is synthesis.
  RowMatrix d_in(c, d_out.cols());
  for (int ch = 0; ch < c; ++ch) {
    const RowMatrix s = tr.synthesis(Eigen::Map<const RowMatrix>(dx_re.row(ch).data(), rows, cols),
                                     Eigen::Map<const RowMatrix>(dx_im.row(ch).data(), rows, cols));
    d_in.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), s.size());
  }
  return d_in;
}

}  // namespace

Eigen::VectorXd backward(const MnoModel& model, const ForwardCache& cache,
                         const FlowField& output_grad) {
  const auto& cfg = model.config();
  const auto& layout = model.layout();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout.total_size());

  const RowMatrix d_out = to_channels(output_grad);
  const RowMatrix hidden = cache.hidden_pre.cwiseProduct(cache.hidden_cdf);
  write_matrix(grad, layout.at("proj2.weight"), d_out * hidden.transpose());
  write_vector(grad, layout.at("proj2.bias"), d_out.rowwise().sum());

  const RowMatrix d_hidden =
      gelu_grad(model.matrix("proj2.weight").transpose() * d_out, cache.hidden_pre,
                cache.hidden_cdf);
  write_matrix(grad, layout.at("proj1.weight"), d_hidden * cache.final_features.transpose());
  write_vector(grad, layout.at("proj1.bias"), d_hidden.rowwise().sum());

  RowMatrix d_x = model.matrix("proj1.weight").transpose() * d_hidden;
  for (int b = cfg.num_blocks - 1; b >= 0; --b) {
    const RowMatrix d_z =
        (b + 1 < cfg.num_blocks) ? gelu_grad(d_x, cache.pre_activations[b], cache.cdfs[b]) : d_x;
    const RowMatrix& x_in = cache.block_inputs[b];
    write_matrix(grad, layout.at(block_tensor(b, "bypass.weight")), d_z * x_in.transpose());
    write_vector(grad, layout.at(block_tensor(b, "bypass.bias")), d_z.rowwise().sum());
    RowMatrix d_in = spectral_backward(model, b, cache, d_z, grad);
    d_in.noalias() += model.matrix(block_tensor(b, "bypass.weight")).transpose() * d_z;
    d_x = std::move(d_in);
  }

  write_matrix(grad, layout.at("lift.weight"), d_x * cache.input.transpose());
  write_vector(grad, layout.at("lift.bias"), d_x.rowwise().sum());
  return grad;
}

Gradient gradient(const MnoModel& model, const std::vector<FlowPair>& batch,
                  const LossConfig& loss_cfg) {
  if (batch.empty()) throw std::invalid_argument("gradient: empty batch");
  Gradient out;
  out.values = Eigen::VectorXd::Zero(model.layout().total_size());
  ForwardCache cache;
  for (const auto& [input, target] : batch) {
    const FlowField pred = forward(model, input, cache);
    const LossValue lv = loss_with_gradient(pred, target, loss_cfg);
    out.loss += lv.value;
    out.values += backward(model, cache, lv.grad);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  out.loss *= scale;
  out.values *= scale;
  return out;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
  if (!params.allFinite()) throw std::runtime_error("adam_step: non-finite parameter");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (scheduler_step < 1) throw std::invalid_argument("train: scheduler_step must be >= 1");
  if (!(scheduler_gamma > 0.0)) throw std::invalid_argument("train: scheduler_gamma must be > 0");
  if (split_train < 0 || split_val < 0 || split_test < 0 ||
      std::abs(split_train + split_val + split_test - 1.0) > 1e-9) {
    throw std::invalid_argument("train: split fractions must be non-negative and sum to 1");
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
  return cfg.learning_rate * std::pow(cfg.scheduler_gamma, epoch / cfg.scheduler_step);
}

SplitCounts split_counts(std::size_t n, const TrainConfig& cfg) {
  SplitCounts s;
  s.train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.split_train));
  s.val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.split_val));
  s.train = std::min(s.train, n);
  s.val = std::min(s.val, n - s.train);
  s.test = n - s.train - s.val;
  return s;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the order is library independent.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

double mean_loss(const MnoModel& model, const std::vector<FlowPair>& data,
                 const LossConfig& loss_cfg) {
  double total = 0.0;
  for (const auto& [input, target] : data) total += loss(forward(model, input), target, loss_cfg);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

TrainResult train(const MnoModel& init, const std::vector<FlowPair>& train_set,
                  const std::vector<FlowPair>& val_set, const TrainConfig& cfg,
                  const LossConfig& loss_cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  loss_cfg.validate();
  if (train_set.size() < static_cast<std::size_t>(cfg.batch_size)) {
    throw std::invalid_argument("train: training set (" + std::to_string(train_set.size()) +
                                ") smaller than one batch (" + std::to_string(cfg.batch_size) +
                                ")");
  }

  MnoModel model = init;
  AdamState opt(model.parameters().size());
  TrainResult result{model, {}, 0};
  double best = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<FlowPair> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);
      const Gradient g = gradient(model, batch, loss_cfg);
      epoch_loss += g.loss * static_cast<double>(batch.size());
      adam_step(model.parameters(), g.values, opt, lr, cfg.adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.val_loss = val_set.empty() ? mean_loss(model, train_set, loss_cfg)
                                   : mean_loss(model, val_set, loss_cfg);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

TrainResult train(const MnoModel& init, const std::vector<FlowPair>& dataset,
                  const TrainConfig& cfg, const LossConfig& loss_cfg) {
  cfg.validate();
  if (dataset.size() < static_cast<std::size_t>(cfg.batch_size)) {
    throw std::invalid_argument("train: dataset smaller than one batch");
  }
  const auto perm = seeded_permutation(dataset.size(), cfg.seed);
  const SplitCounts counts = split_counts(dataset.size(), cfg);
  std::vector<FlowPair> tr, va;
  for (std::size_t i = 0; i < counts.train; ++i) tr.push_back(dataset[perm[i]]);
  for (std::size_t i = counts.train; i < counts.train + counts.val; ++i) {
    va.push_back(dataset[perm[i]]);
  }
  return train(init, tr, va, cfg, loss_cfg);
}

}  // namespace flowmno::mno

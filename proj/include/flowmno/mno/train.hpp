#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "flowmno/mno/loss.hpp"
#include "flowmno/mno/model.hpp"

namespace flowmno::mno {

using FlowPair = std::pair<FlowField, FlowField>;  // (input, target)

struct Gradient {
  double loss = 0.0;         // mean batch loss
  Eigen::VectorXd values;    // same layout as MnoModel::parameters()
};

/// Exact reverse-mode derivative of the mean batch loss. Batch items are
/// accumulated in order, so the result is deterministic.
Gradient gradient(const MnoModel& model, const std::vector<FlowPair>& batch,
                  const LossConfig& loss_cfg);

/// Backward pass for a single example given d loss / d output.
Eigen::VectorXd backward(const MnoModel& model, const ForwardCache& cache,
                         const FlowField& output_grad);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  explicit AdamState(Eigen::Index n = 0)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected Adam update. Throws std::runtime_error if any parameter
/// becomes non-finite.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

struct TrainConfig {
  int epochs = 60;
  int batch_size = 5;
  double learning_rate = 0.0005;
  int scheduler_step = 10;
  double scheduler_gamma = 0.5;
  AdamConfig adam;
  double split_train = 0.70;
  double split_val = 0.20;
  double split_test = 0.10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Step decay: learning_rate * gamma^floor(epoch / scheduler_step).
double lr_at(int epoch, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  MnoModel model;  // lowest validation loss seen
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};

/// Partition sizes for n items: train and val rounded, test takes the remainder.
SplitCounts split_counts(std::size_t n, const TrainConfig& cfg);

/// Seeded permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on pre-split data. An empty validation set falls back to the
/// training loss for model selection.
TrainResult train(const MnoModel& init, const std::vector<FlowPair>& train_set,
                  const std::vector<FlowPair>& val_set, const TrainConfig& cfg,
                  const LossConfig& loss_cfg, const EpochCallback& on_epoch = {});

/// Splits `dataset` 70/20/10 by seeded shuffle, then trains on the first two parts.
TrainResult train(const MnoModel& init, const std::vector<FlowPair>& dataset,
                  const TrainConfig& cfg, const LossConfig& loss_cfg);

double mean_loss(const MnoModel& model, const std::vector<FlowPair>& data,
                 const LossConfig& loss_cfg);

}  // namespace flowmno::mno

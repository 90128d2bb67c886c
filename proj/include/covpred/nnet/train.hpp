#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "covpred/nnet/early_stopping.hpp"
#include "covpred/nnet/fused_net.hpp"

namespace covpred::nnet {

/// Row-aligned inputs, targets and 0/1 observation mask.
struct TrainingSet {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  Eigen::MatrixXd mask;

  Eigen::Index size() const { return x.rows(); }
  void validate(int input_dim, int output_dim) const;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int early_stop_window = 10;
  double early_stop_rel_improvement = 0.01;
  StallRule stall_rule = StallRule::per_epoch;
  bool stop_requires_both = true;
  int batch_size = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  FusedNet model;  // snapshot with the lowest validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

/// Mean masked MSE of `net` over a whole set, evaluated in chunks.
double evaluate_loss(const FusedNet& net, const TrainingSet& data);

TrainResult train(FusedNet model, const TrainingSet& train_set, const TrainingSet& val_set,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace covpred::nnet

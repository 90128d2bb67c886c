#include "covpred/nnet/train.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>

#include "covpred/error.hpp"
#include "covpred/nnet/adam.hpp"

namespace covpred::nnet {

void TrainingSet::validate(int input_dim, int output_dim) const {
  if (x.rows() == 0) throw InvalidInput("training data is empty");
  if (x.cols() != input_dim) throw ShapeError("training inputs have the wrong width");
  if (y.rows() != x.rows() || y.cols() != output_dim || mask.rows() != x.rows() ||
      mask.cols() != output_dim)
    throw ShapeError("training targets/mask do not match inputs");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  if (max_epochs < 1) throw InvalidInput("max_epochs must be at least 1");
  if (early_stop_window < 1) throw InvalidInput("early-stop window must be at least 1");
  if (!(early_stop_rel_improvement > 0.0 && early_stop_rel_improvement < 1.0))
    throw InvalidInput("early-stop improvement fraction must lie in (0, 1)");
  if (batch_size < 1) throw InvalidInput("batch size must be at least 1");
}

double evaluate_loss(const FusedNet& net, const TrainingSet& data) {
  constexpr Eigen::Index kChunk = 4096;
  double weighted = 0.0;
  for (Eigen::Index start = 0; start < data.size(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, data.size() - start);
    const Eigen::MatrixXd yhat = net.forward_batch(data.x.middleRows(start, n));
    weighted += masked_mse_batch(data.y.middleRows(start, n), yhat, data.mask.middleRows(start, n),
                                 nullptr) *
                static_cast<double>(n);
  }
  return weighted / static_cast<double>(data.size());
}

TrainResult train(FusedNet model, const TrainingSet& train_set, const TrainingSet& val_set,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  train_set.validate(model.input_dim(), model.output_dim());
  val_set.validate(model.input_dim(), model.output_dim());

  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  std::vector<AdamState> states;
  for (const FusedPart& p : model.parts()) states.push_back(AdamState::for_network(p.net));

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  EarlyStopping stopper(cfg.early_stop_window, cfg.early_stop_rel_improvement, cfg.stall_rule,
                        cfg.stop_requires_both);
  TrainResult result;
  result.model = model;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  FusedNet::Pass pass;
  std::vector<Gradients> grads;
  Eigen::MatrixXd grad_out;
  Eigen::MatrixXd bx, by, bm;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + end);
      bx = train_set.x(idx, Eigen::all);
      by = train_set.y(idx, Eigen::all);
      bm = train_set.mask(idx, Eigen::all);
      const Eigen::MatrixXd& yhat = model.forward_batch(bx, pass);
      loss_sum += masked_mse_batch(by, yhat, bm, &grad_out) * static_cast<double>(idx.size());
      model.backward_batch(pass, grad_out, grads);
      for (std::size_t k = 0; k < model.parts().size(); ++k)
        adam_step(model.parts()[k].net, grads[k], states[k], adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = evaluate_loss(model, val_set);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss))
      throw ConvergenceError("training diverged at epoch " + std::to_string(epoch));
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (stopper.update(rec.train_loss, rec.val_loss)) {
      result.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  return result;
}

}  // namespace covpred::nnet

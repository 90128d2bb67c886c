#pragma once

#include <vector>

namespace covpred::nnet {

/// How a loss curve is judged to have stalled.
enum class StallRule {
  /// Every one of the last `window` epochs improved on its predecessor by
  /// no more than `threshold` (relative).
  per_epoch,
  /// The current loss improved on the loss `window` epochs earlier by no
  /// more than `threshold` (relative).
  windowed,
};

/// Stall detector for one loss curve.
class StallTracker {
 public:
  StallTracker(int window, double threshold, StallRule rule);

  /// Records the next epoch's loss; returns whether the curve is stalled.
  bool update(double loss);
  bool stalled() const { return stalled_; }

 private:
  bool improved_enough(double before, double after) const;

  int window_;
  double threshold_;
  StallRule rule_;
  std::vector<double> history_;
  int consecutive_ = 0;
  bool stalled_ = false;
};

/// Stops training once the train and validation curves have stalled. With
/// `require_both` false, either curve stalling is enough.
class EarlyStopping {
 public:
  EarlyStopping(int window, double threshold, StallRule rule = StallRule::per_epoch,
                bool require_both = true);

  /// Feed one epoch; returns true when training should stop after it.
  bool update(double train_loss, double val_loss);

 private:
  StallTracker train_;
  StallTracker val_;
  bool require_both_;
};

}  // namespace covpred::nnet

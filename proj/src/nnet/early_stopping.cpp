#include "covpred/nnet/early_stopping.hpp"

#include <cmath>

#include "covpred/error.hpp"

namespace covpred::nnet {

StallTracker::StallTracker(int window, double threshold, StallRule rule)
    : window_(window), threshold_(threshold), rule_(rule) {
  if (window < 1) throw InvalidInput("early-stop window must be at least 1");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw InvalidInput("early-stop threshold must lie in (0, 1)");
}

bool StallTracker::improved_enough(double before, double after) const {
  // A zero loss cannot improve further.
  if (before <= 0.0) return false;
  return (before - after) / before > threshold_;
}

bool StallTracker::update(double loss) {
  history_.push_back(loss);
  const auto n = history_.size();
  switch (rule_) {
    case StallRule::per_epoch:
      if (n >= 2) {
        if (improved_enough(history_[n - 2], loss))
          consecutive_ = 0;
        else
          ++consecutive_;
      }
      stalled_ = consecutive_ >= window_;
      break;
    case StallRule::windowed:
      stalled_ = n > static_cast<std::size_t>(window_) &&
                 !improved_enough(history_[n - 1 - window_], loss);
      break;
  }
  return stalled_;
}

EarlyStopping::EarlyStopping(int window, double threshold, StallRule rule, bool require_both)
    : train_(window, threshold, rule), val_(window, threshold, rule), require_both_(require_both) {}

bool EarlyStopping::update(double train_loss, double val_loss) {
  const bool t = train_.update(train_loss);
  const bool v = val_.update(val_loss);
  return require_both_ ? (t && v) : (t || v);
}

}  // namespace covpred::nnet

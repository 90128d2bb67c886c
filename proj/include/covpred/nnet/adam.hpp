#pragma once

#include <cstdint>

#include "covpred/nnet/mlp.hpp"

namespace covpred::nnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for one network plus the step counter.
struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::int64_t step = 0;

  static AdamState for_network(const Mlp& m);
};

/// One bias-corrected adaptive-moment update of `m` in place.
void adam_step(Mlp& m, const Gradients& grads, AdamState& state, const AdamConfig& cfg);

}  // namespace covpred::nnet
